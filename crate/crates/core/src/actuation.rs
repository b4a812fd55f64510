//! Magnetic force and torque on the magnetized front fins, and the fin hinge
//! as a sinusoidally driven second-order oscillator.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Magnetized front-fin material lumped into one dipole body.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MagnetizedFin {
    /// Magnetized volume (m^3).
    pub volume_m3: f64,
    /// Remanent magnetization magnitude (A/m).
    pub magnetization: f64,
    /// Magnetization direction in the body frame.
    pub direction: [f64; 3],
}

impl MagnetizedFin {
    pub fn new(volume_m3: f64, magnetization: f64) -> Self {
        Self {
            volume_m3,
            magnetization,
            direction: [0.0, 0.0, 1.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.volume_m3 > 0.0) {
            return Err(Error::input("fin volume must be > 0"));
        }
        if !(self.magnetization >= 0.0 && self.magnetization.is_finite()) {
            return Err(Error::input("fin magnetization must be >= 0"));
        }
        let n = Vector3::from(self.direction).norm();
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::input(format!(
                "magnetization direction must be unit length, |d| = {n}"
            )));
        }
        Ok(())
    }

    /// Magnetization vector M (A/m).
    pub fn moment_density(&self) -> Vector3<f64> {
        Vector3::from(self.direction) * self.magnetization
    }

    /// Small-angle torque amplitude (N m) under a vertical drive of `b_z_mt`.
    pub fn torque_amplitude(&self, b_z_mt: f64) -> f64 {
        self.volume_m3 * self.magnetization * b_z_mt * 1e-3
    }
}

/// Single-degree-of-freedom root hinge of the pectoral fin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FinOscillator {
    /// Rotational inertia including entrained fluid (kg m^2).
    pub inertia: f64,
    /// Viscous damping (N m s/rad).
    pub damping: f64,
    /// Effective stiffness, elastic plus in-plane field restoring (N m/rad).
    pub stiffness: f64,
    /// Deflection clamp (rad).
    pub max_deflection: f64,
}

impl Default for FinOscillator {
    fn default() -> Self {
        Self {
            inertia: 1.0e-9,
            damping: 1.05e-7,
            stiffness: 5.2e-6,
            max_deflection: 1.2,
        }
    }
}

impl FinOscillator {
    pub fn validate(&self) -> Result<()> {
        if !(self.inertia > 0.0 && self.damping > 0.0 && self.stiffness > 0.0) {
            return Err(Error::input(
                "fin inertia, damping and stiffness must be > 0",
            ));
        }
        if !(self.max_deflection > 0.0 && self.max_deflection < std::f64::consts::FRAC_PI_2) {
            return Err(Error::input("fin max deflection must lie in (0, pi/2)"));
        }
        Ok(())
    }

    pub fn natural_frequency_hz(&self) -> f64 {
        (self.stiffness / self.inertia).sqrt() / std::f64::consts::TAU
    }

    pub fn damping_ratio(&self) -> f64 {
        self.damping / (2.0 * (self.stiffness * self.inertia).sqrt())
    }

    /// Steady-state compliance |H(omega)| (rad per N m).
    pub fn compliance(&self, frequency_hz: f64) -> f64 {
        let w = std::f64::consts::TAU * frequency_hz;
        let re = self.stiffness - self.inertia * w * w;
        let im = self.damping * w;
        1.0 / re.hypot(im)
    }

    pub fn energy(&self, state: &FinState) -> f64 {
        0.5 * self.inertia * state.rate * state.rate
            + 0.5 * self.stiffness * state.angle * state.angle
    }
}

/// tau = V (M x B)
pub fn magnetic_torque(m: &Vector3<f64>, b: &Vector3<f64>, volume: f64) -> Vector3<f64> {
    m.cross(b) * volume
}

/// F = V (M . grad) B, with `grad_b[(i, j)] = dB_i / dx_j`.
pub fn magnetic_force(m: &Vector3<f64>, grad_b: &Matrix3<f64>, volume: f64) -> Vector3<f64> {
    grad_b * m * volume
}

/// Steady bending amplitude (rad) under a vertical sinusoid of amplitude `b_z_mt` at `frequency_hz`.
pub fn steady_bending_amplitude(
    fin: &MagnetizedFin,
    osc: &FinOscillator,
    b_z_mt: f64,
    frequency_hz: f64,
) -> Result<f64> {
    if !(frequency_hz > 0.0) {
        return Err(Error::input(format!(
            "driving frequency must be > 0, got {frequency_hz}"
        )));
    }
    let beta = fin.torque_amplitude(b_z_mt).abs() * osc.compliance(frequency_hz);
    Ok(beta.min(osc.max_deflection))
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FinState {
    /// Hinge angle (rad).
    pub angle: f64,
    /// Hinge rate (rad/s).
    pub rate: f64,
}

/// One classical RK4 step of `J a'' + c a' + k a = torque(t)`.
pub fn step_fin(
    osc: &FinOscillator,
    state: FinState,
    torque: impl Fn(f64) -> f64,
    t: f64,
    dt: f64,
) -> FinState {
    let deriv = |s: FinState, time: f64| FinState {
        angle: s.rate,
        rate: (torque(time) - osc.damping * s.rate - osc.stiffness * s.angle) / osc.inertia,
    };
    let add = |s: FinState, d: FinState, h: f64| FinState {
        angle: s.angle + h * d.angle,
        rate: s.rate + h * d.rate,
    };
    let k1 = deriv(state, t);
    let k2 = deriv(add(state, k1, 0.5 * dt), t + 0.5 * dt);
    let k3 = deriv(add(state, k2, 0.5 * dt), t + 0.5 * dt);
    let k4 = deriv(add(state, k3, dt), t + dt);
    FinState {
        angle: state.angle + dt / 6.0 * (k1.angle + 2.0 * k2.angle + 2.0 * k3.angle + k4.angle),
        rate: state.rate + dt / 6.0 * (k1.rate + 2.0 * k2.rate + 2.0 * k3.rate + k4.rate),
    }
}

/// Steps coarser than a twentieth of the forcing period are flagged.
pub fn fin_step_is_stable(dt: f64, frequency_hz: f64) -> bool {
    frequency_hz <= 0.0 || dt < 1.0 / (20.0 * frequency_hz)
}

/// Time-domain hinge response to `tau0 sin(2 pi f t)`.
#[derive(Debug, Clone)]
pub struct FinTrace {
    pub dt: f64,
    pub frequency_hz: f64,
    pub angles: Vec<f64>,
}

impl FinTrace {
    pub fn samples_per_cycle(&self) -> usize {
        (1.0 / (self.frequency_hz * self.dt)).round() as usize
    }

    /// Half peak-to-peak angle over the final forcing cycle.
    pub fn final_cycle_amplitude(&self) -> f64 {
        let n = self.samples_per_cycle().min(self.angles.len());
        let tail = &self.angles[self.angles.len() - n..];
        let (lo, hi) = tail
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &a| {
                (lo.min(a), hi.max(a))
            });
        0.5 * (hi - lo)
    }
}

pub fn simulate_fin(
    fin: &MagnetizedFin,
    osc: &FinOscillator,
    b_z_mt: f64,
    frequency_hz: f64,
    dt: f64,
    cycles: usize,
) -> Result<FinTrace> {
    if !(dt > 0.0) || !(frequency_hz > 0.0) {
        return Err(Error::input("fin simulation needs dt > 0 and f > 0"));
    }
    if !fin_step_is_stable(dt, frequency_hz) {
        log::warn!(
            "fin step {dt} s is coarse for {frequency_hz} Hz forcing (limit {} s)",
            1.0 / (20.0 * frequency_hz)
        );
    }
    let tau0 = fin.torque_amplitude(b_z_mt);
    let w = std::f64::consts::TAU * frequency_hz;
    let steps = (cycles as f64 / (frequency_hz * dt)).round() as usize;
    let mut state = FinState::default();
    let mut angles = Vec::with_capacity(steps + 1);
    angles.push(state.angle);
    for n in 0..steps {
        let t = n as f64 * dt;
        state = step_fin(osc, state, |time| tau0 * (w * time).sin(), t, dt);
        angles.push(state.angle.clamp(-osc.max_deflection, osc.max_deflection));
    }
    Ok(FinTrace {
        dt,
        frequency_hz,
        angles,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_fin() -> MagnetizedFin {
        MagnetizedFin::new(2.3328e-9, 6.0e4)
    }

    const GRID_HZ: [f64; 7] = [1.0, 3.0, 5.0, 7.0, 11.0, 13.0, 15.0];

    #[test]
    fn parallel_moment_feels_no_torque() {
        let m = Vector3::new(1.0e5, -2.0e4, 3.0e3);
        let t = magnetic_torque(&m, &(m * 3.0e-8), 1e-9);
        assert!(t.norm() < 1e-20);
    }

    #[test]
    fn torque_component_example() {
        let t = magnetic_torque(
            &Vector3::new(1e5, 0.0, 0.0),
            &Vector3::new(0.0, 5e-3, 0.0),
            1e-9,
        );
        assert_eq!(t.x, 0.0);
        assert_eq!(t.y, 0.0);
        assert!(((t.z - 5e-7) / 5e-7).abs() < 1e-12);
    }

    #[test]
    fn swapping_arguments_negates_torque() {
        let a = Vector3::new(0.3, -1.2, 2.0);
        let b = Vector3::new(-0.7, 0.4, 0.9);
        assert!((magnetic_torque(&a, &b, 2.0) + magnetic_torque(&b, &a, 2.0)).norm() < 1e-15);
    }

    #[test]
    fn uniform_field_exerts_no_force() {
        let f = magnetic_force(&Vector3::new(1e5, 2e5, -3e4), &Matrix3::zeros(), 1e-9);
        assert_eq!(f, Vector3::zeros());
    }

    #[test]
    fn force_from_single_gradient_component() {
        let (m, g, v) = (4.0e4, 0.25, 2.0e-9);
        let mut grad = Matrix3::zeros();
        grad[(2, 0)] = g; // dBz/dx
        let f = magnetic_force(&Vector3::new(m, 0.0, 0.0), &grad, v);
        assert_eq!(f.x, 0.0);
        assert_eq!(f.y, 0.0);
        assert!((f.z - v * m * g).abs() < 1e-24);
    }

    #[test]
    fn bending_amplitude_edge_cases() {
        let (fin, osc) = (default_fin(), FinOscillator::default());
        assert_eq!(steady_bending_amplitude(&fin, &osc, 0.0, 5.0).unwrap(), 0.0);
        assert!(steady_bending_amplitude(&fin, &osc, 5.0, 0.0).is_err());
        assert!(steady_bending_amplitude(&fin, &osc, 5.0, -1.0).is_err());
    }

    #[test]
    fn bending_increases_with_field() {
        let (fin, osc) = (default_fin(), FinOscillator::default());
        let mut last = 0.0;
        for b in [0.5, 1.5, 2.25, 3.0, 4.0, 5.0] {
            let beta = steady_bending_amplitude(&fin, &osc, b, 1.0).unwrap();
            assert!(beta > last);
            last = beta;
        }
    }

    #[test]
    fn bending_decreases_with_frequency_when_resonance_is_low() {
        let fin = default_fin();
        // Natural frequency 0.5 Hz.
        let inertia = 1.0e-9;
        let stiffness = inertia * (std::f64::consts::TAU * 0.5).powi(2);
        let osc = FinOscillator {
            inertia,
            stiffness,
            damping: 0.2 * 2.0 * (stiffness * inertia).sqrt(),
            max_deflection: 1.5,
        };
        let betas: Vec<f64> = GRID_HZ
            .iter()
            .map(|&f| steady_bending_amplitude(&fin, &osc, 3.0, f).unwrap())
            .collect();
        assert!(betas.windows(2).all(|w| w[1] < w[0]), "{betas:?}");
    }

    #[test]
    fn default_oscillator_has_no_displacement_peak() {
        let osc = FinOscillator::default();
        assert!(osc.damping_ratio() > std::f64::consts::FRAC_1_SQRT_2);
        assert!((osc.natural_frequency_hz() - 11.48).abs() < 0.01);
    }

    #[test]
    fn clamp_caps_amplitude() {
        let osc = FinOscillator {
            max_deflection: 0.05,
            ..Default::default()
        };
        let beta = steady_bending_amplitude(&default_fin(), &osc, 50.0, 1.0).unwrap();
        assert_eq!(beta, 0.05);
    }

    #[test]
    fn zero_torque_at_rest_stays_at_rest() {
        let s = step_fin(
            &FinOscillator::default(),
            FinState::default(),
            |_| 0.0,
            0.0,
            1e-4,
        );
        assert_eq!(s, FinState::default());
    }

    #[test]
    fn time_domain_amplitude_matches_closed_form() {
        let (fin, osc) = (default_fin(), FinOscillator::default());
        for f in [1.0, 7.0, 11.0] {
            let closed = steady_bending_amplitude(&fin, &osc, 5.0, f).unwrap();
            let dt = 1.0 / (f * 2000.0);
            let trace = simulate_fin(&fin, &osc, 5.0, f, dt, 20).unwrap();
            let measured = trace.final_cycle_amplitude();
            assert!(
                ((measured - closed) / closed).abs() < 0.01,
                "f={f}: {measured} vs {closed}"
            );
        }
    }

    #[test]
    fn halving_step_barely_moves_amplitude() {
        let (fin, osc) = (default_fin(), FinOscillator::default());
        let coarse = simulate_fin(&fin, &osc, 5.0, 1.0, 1e-3, 20)
            .unwrap()
            .final_cycle_amplitude();
        let fine = simulate_fin(&fin, &osc, 5.0, 1.0, 5e-4, 20)
            .unwrap()
            .final_cycle_amplitude();
        assert!(((coarse - fine) / fine).abs() < 1e-3);
    }

    #[test]
    fn free_decay_never_gains_energy() {
        let osc = FinOscillator::default();
        let mut s = FinState {
            angle: 0.2,
            rate: -3.0,
        };
        let mut e = osc.energy(&s);
        for n in 0..5000 {
            s = step_fin(&osc, s, |_| 0.0, n as f64 * 1e-4, 1e-4);
            let next = osc.energy(&s);
            assert!(next <= e * (1.0 + 1e-14), "step {n}");
            e = next;
        }
    }

    #[test]
    fn stability_flag() {
        assert!(fin_step_is_stable(1e-3, 11.0));
        assert!(!fin_step_is_stable(0.01, 11.0));
    }

    #[test]
    fn fin_validation() {
        let mut fin = default_fin();
        fin.validate().unwrap();
        fin.direction = [1.0, 1.0, 0.0];
        assert!(fin.validate().is_err());
        assert!(FinOscillator {
            max_deflection: 2.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(FinOscillator {
            damping: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
    }
}
