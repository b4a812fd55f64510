//! Planar swimming dynamics: flapping thrust, quadratic drag, and a heading servo whose
//! authority scales with the in-plane field strength.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::actuation::{steady_bending_amplitude, FinOscillator, MagnetizedFin};
use crate::error::{Error, Result};
use crate::field::DriveSignal;

/// Heading tolerance for settling (degrees).
pub const SETTLING_BAND_DEG: f64 = 2.0;

/// Wraps an angle into (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BodyState {
    /// Position (mm).
    pub x: f64,
    pub y: f64,
    /// Heading (rad), kept in (-pi, pi].
    pub psi: f64,
    /// Velocity (mm/s).
    pub vx: f64,
    pub vy: f64,
    /// Heading rate (rad/s).
    pub psi_rate: f64,
}

impl BodyState {
    pub fn at_rest(psi: f64) -> Self {
        Self {
            psi: wrap_angle(psi),
            ..Default::default()
        }
    }

    pub fn speed(&self) -> f64 {
        self.vx.hypot(self.vy)
    }

    /// Rotates the state about the origin by `delta` radians.
    pub fn rotated(&self, delta: f64) -> Self {
        let (s, c) = delta.sin_cos();
        Self {
            x: c * self.x - s * self.y,
            y: s * self.x + c * self.y,
            psi: wrap_angle(self.psi + delta),
            vx: c * self.vx - s * self.vy,
            vy: s * self.vx + c * self.vy,
            psi_rate: self.psi_rate,
        }
    }

    fn is_finite(&self) -> bool {
        [self.x, self.y, self.psi, self.vx, self.vy, self.psi_rate]
            .iter()
            .all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HydroParams {
    /// Effective mass including added mass (kg).
    pub mass: f64,
    /// Thrust coefficient (N s^2 / rad^2).
    pub thrust_coeff: f64,
    /// Quadratic drag coefficient (N s^2 / mm^2).
    pub drag_coeff: f64,
    /// Heading natural frequency at unit field authority (rad/s).
    pub heading_omega: f64,
    /// Heading damping ratio.
    pub heading_damping: f64,
    /// Heading authority per unit in-plane field (1/mT).
    pub field_gain: f64,
}

impl Default for HydroParams {
    fn default() -> Self {
        Self {
            mass: 3.0e-5,
            thrust_coeff: 1.0e-6,
            drag_coeff: 4.0e-8,
            heading_omega: 5.0,
            heading_damping: 0.35,
            field_gain: 0.2,
        }
    }
}

impl HydroParams {
    pub fn validate(&self) -> Result<()> {
        let all = [
            ("mass", self.mass),
            ("thrust_coeff", self.thrust_coeff),
            ("drag_coeff", self.drag_coeff),
            ("heading_omega", self.heading_omega),
            ("heading_damping", self.heading_damping),
            ("field_gain", self.field_gain),
        ];
        for (name, v) in all {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::input(format!("hydro.{name} must be > 0, got {v}")));
            }
        }
        if self.heading_damping >= 1.0 {
            return Err(Error::input("hydro.heading_damping must be < 1"));
        }
        Ok(())
    }
}

/// Flapping thrust T = C_t beta^2 f^2 (N).
pub fn thrust(beta: f64, frequency_hz: f64, p: &HydroParams) -> f64 {
    p.thrust_coeff * beta * beta * frequency_hz * frequency_hz
}

/// Fin, hinge and body parameters of one swimmer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Swimmer {
    pub fin: MagnetizedFin,
    pub osc: FinOscillator,
    pub hydro: HydroParams,
}

impl Swimmer {
    pub fn validate(&self) -> Result<()> {
        self.fin.validate()?;
        self.osc.validate()?;
        self.hydro.validate()
    }

    /// Fin amplitude (rad) for vertical amplitude `b_z_mt`.
    pub fn bending(&self, b_z_mt: f64, frequency_hz: f64) -> Result<f64> {
        steady_bending_amplitude(&self.fin, &self.osc, b_z_mt, frequency_hz)
    }

    /// Drag-balanced forward speed (mm/s).
    pub fn steady_speed(&self, b_z_mt: f64, frequency_hz: f64) -> Result<f64> {
        if frequency_hz == 0.0 {
            return Ok(0.0);
        }
        let beta = self.bending(b_z_mt, frequency_hz)?;
        Ok((thrust(beta, frequency_hz, &self.hydro) / self.hydro.drag_coeff).sqrt())
    }

    /// One RK4 step toward the drive's yaw. Thrust follows B_z, heading authority follows B_xy.
    pub fn step(&self, state: &BodyState, drive: &DriveSignal, dt: f64) -> Result<BodyState> {
        if !(dt > 0.0) {
            return Err(Error::input(format!("dt must be > 0, got {dt}")));
        }
        let v_star = self.steady_speed(drive.b_z_mt, drive.frequency_hz)?;
        let h = &self.hydro;
        let thrust_term = h.drag_coeff * v_star * v_star;
        let gamma = drive.yaw_deg.to_radians();
        let authority = h.field_gain * drive.b_xy_mt;
        let stiffness = authority * h.heading_omega * h.heading_omega;
        let damping = 2.0 * h.heading_damping * authority.sqrt() * h.heading_omega;

        // State vector: x, y, psi (unwrapped within the step), vx, vy, psi_rate.
        let deriv = |s: [f64; 6]| -> [f64; 6] {
            let speed = s[3].hypot(s[4]);
            let (sin_psi, cos_psi) = s[2].sin_cos();
            let k = 1000.0 / h.mass;
            [
                s[3],
                s[4],
                s[5],
                k * (thrust_term * cos_psi - h.drag_coeff * speed * s[3]),
                k * (thrust_term * sin_psi - h.drag_coeff * speed * s[4]),
                stiffness * wrap_angle(gamma - s[2]) - damping * s[5],
            ]
        };
        let s0 = [
            state.x,
            state.y,
            state.psi,
            state.vx,
            state.vy,
            state.psi_rate,
        ];
        let add = |a: [f64; 6], d: [f64; 6], c: f64| {
            std::array::from_fn::<f64, 6, _>(|i| a[i] + c * d[i])
        };
        let k1 = deriv(s0);
        let k2 = deriv(add(s0, k1, 0.5 * dt));
        let k3 = deriv(add(s0, k2, 0.5 * dt));
        let k4 = deriv(add(s0, k3, dt));
        let s1: [f64; 6] =
            std::array::from_fn(|i| s0[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
        let next = BodyState {
            x: s1[0],
            y: s1[1],
            psi: wrap_angle(s1[2]),
            vx: s1[3],
            vy: s1[4],
            psi_rate: s1[5],
        };
        if !next.is_finite() {
            return Err(Error::Analysis("body integration diverged".into()));
        }
        Ok(next)
    }
}

/// Step with B_xy = B_z = `b_mt` (45 degree pitch) toward yaw `gamma_rad`.
pub fn step_body(
    swimmer: &Swimmer,
    state: &BodyState,
    gamma_rad: f64,
    b_mt: f64,
    frequency_hz: f64,
    dt: f64,
) -> Result<BodyState> {
    let drive = DriveSignal::with_pitch(b_mt, 45.0, gamma_rad.to_degrees(), frequency_hz);
    swimmer.step(state, &drive, dt)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub state: BodyState,
    /// Commanded yaw (degrees).
    pub gamma_cmd_deg: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub samples: Vec<TrajectorySample>,
}

impl TrajectoryRecord {
    pub fn final_state(&self) -> Option<&BodyState> {
        self.samples.last().map(|s| &s.state)
    }

    pub fn points(&self) -> Vec<[f64; 2]> {
        self.samples
            .iter()
            .map(|s| [s.state.x, s.state.y])
            .collect()
    }

    /// Number of distinct consecutive commanded yaws.
    pub fn yaw_epochs(&self) -> usize {
        let mut n = 0;
        let mut last = None;
        for s in &self.samples {
            if last != Some(s.gamma_cmd_deg) {
                n += 1;
                last = Some(s.gamma_cmd_deg);
            }
        }
        n
    }
}

/// Measured response to a single yaw step taken from straight steady swimming along +X.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TurnResponse {
    /// Peak heading excess beyond the target (degrees).
    pub overshoot_deg: f64,
    /// Time after the step until the heading stays within the settling band (s).
    pub settling_time_s: f64,
    /// Peak angle between velocity and heading (degrees).
    pub peak_drift_deg: f64,
    /// Minimum velocity component along +X over the first quarter of the settling time (mm/s).
    pub min_forward_velocity_early: f64,
    pub record: TrajectoryRecord,
}

pub fn step_turn_response(
    swimmer: &Swimmer,
    turn_deg: f64,
    b_mt: f64,
    frequency_hz: f64,
    dt: f64,
    duration_s: f64,
) -> Result<TurnResponse> {
    let v0 = swimmer.steady_speed(b_mt, frequency_hz)?;
    let mut state = BodyState {
        vx: v0,
        ..Default::default()
    };
    let drive = DriveSignal::with_pitch(b_mt, 45.0, turn_deg, frequency_hz);
    let steps = (duration_s / dt).round() as usize;
    let mut record = TrajectoryRecord::default();
    record.samples.push(TrajectorySample {
        t: 0.0,
        state,
        gamma_cmd_deg: turn_deg,
    });
    for n in 1..=steps {
        state = swimmer.step(&state, &drive, dt)?;
        record.samples.push(TrajectorySample {
            t: n as f64 * dt,
            state,
            gamma_cmd_deg: turn_deg,
        });
    }
    let target = turn_deg.to_radians();
    let sign = turn_deg.signum();
    let overshoot_deg = record
        .samples
        .iter()
        .map(|s| sign * wrap_angle(s.state.psi - target))
        .fold(0.0, f64::max)
        .to_degrees();
    let settling_time_s = settling_time(&record, target, 0.0)
        .ok_or_else(|| Error::Analysis(format!("heading did not settle within {duration_s} s")))?;
    let peak_drift_deg = record
        .samples
        .iter()
        .filter(|s| s.state.speed() > 1e-9)
        .map(|s| wrap_angle(s.state.vy.atan2(s.state.vx) - s.state.psi).abs())
        .fold(0.0, f64::max)
        .to_degrees();
    let min_forward_velocity_early = record
        .samples
        .iter()
        .take_while(|s| s.t <= 0.25 * settling_time_s)
        .map(|s| s.state.vx)
        .fold(f64::INFINITY, f64::min);
    Ok(TurnResponse {
        overshoot_deg,
        settling_time_s,
        peak_drift_deg,
        min_forward_velocity_early,
        record,
    })
}

/// Time after `t_cmd` from which the heading stays within the settling band of `target` (rad).
pub fn settling_time(record: &TrajectoryRecord, target: f64, t_cmd: f64) -> Option<f64> {
    let band = SETTLING_BAND_DEG.to_radians();
    let after: Vec<&TrajectorySample> = record.samples.iter().filter(|s| s.t >= t_cmd).collect();
    let last_out = after
        .iter()
        .rposition(|s| wrap_angle(s.state.psi - target).abs() > band);
    match last_out {
        None => Some(0.0),
        Some(i) if i + 1 < after.len() => Some(after[i + 1].t - t_cmd),
        Some(_) => None,
    }
}


#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn trajectories_are_rotation_equivariant(
            delta in -PI..PI,
            psi0 in -PI..PI,
            turn in -150.0f64..150.0,
        ) {
            let s = Swimmer {
                fin: MagnetizedFin::new(2.3328e-9, 6.0e4),
                osc: FinOscillator::default(),
                hydro: HydroParams::default(),
            };
            let gamma = psi0 + turn.to_radians();
            let mut a = BodyState::at_rest(psi0);
            let mut b = a.rotated(delta);
            for _ in 0..1500 {
                a = step_body(&s, &a, gamma, 4.0, 11.0, 1e-3).unwrap();
                b = step_body(&s, &b, gamma + delta, 4.0, 11.0, 1e-3).unwrap();
            }
            let ar = a.rotated(delta);
            prop_assert!((ar.x - b.x).abs() < 1e-6 && (ar.y - b.y).abs() < 1e-6);
            prop_assert!(wrap_angle(ar.psi - b.psi).abs() < 1e-9);
        }

        #[test]
        fn speed_grows_with_field(f in 0.5f64..20.0, b in 0.1f64..5.0) {
            let s = Swimmer {
                fin: MagnetizedFin::new(2.3328e-9, 6.0e4),
                osc: FinOscillator::default(),
                hydro: HydroParams::default(),
            };
            prop_assert!(s.steady_speed(b * 1.1, f).unwrap() >= s.steady_speed(b, f).unwrap());
        }
    }
}
