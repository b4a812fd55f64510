//! Fin surface displacement: rigid spanwise swing plus a chordwise travelling wave,
//! and front/rear hinge phase-delay measurement.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::actuation::FinTrace;
use crate::error::{Error, Result};
use crate::geometry::RobotGeometry;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FinWaveParams {
    /// Swing amplitude (rad).
    pub swing_amplitude: f64,
    /// Travelling-wave amplitude at the fin tip (mm).
    pub wave_amplitude: f64,
    /// Chordwise decay rate (1/mm).
    pub decay: f64,
    /// Chordwise wavenumber (1/mm).
    pub wavenumber: f64,
    /// Front-to-rear phase delay (rad).
    pub phase_delay: f64,
    /// Angular frequency (rad/s).
    pub omega: f64,
}

impl Default for FinWaveParams {
    fn default() -> Self {
        Self {
            swing_amplitude: 0.1,
            wave_amplitude: 0.6,
            decay: 0.03,
            wavenumber: 0.1,
            phase_delay: PI / 4.0,
            omega: TAU * 11.0,
        }
    }
}

impl FinWaveParams {
    pub fn validate(&self, max_deflection: f64) -> Result<()> {
        if !(0.0..=max_deflection).contains(&self.swing_amplitude) {
            return Err(Error::input(format!(
                "swing amplitude {} outside [0, {max_deflection}]",
                self.swing_amplitude
            )));
        }
        if !(self.wave_amplitude >= 0.0 && self.decay >= 0.0) {
            return Err(Error::input("wave amplitude and decay must be >= 0"));
        }
        if !(0.0..=PI).contains(&self.phase_delay) {
            return Err(Error::input(format!(
                "phase delay {} outside [0, pi]",
                self.phase_delay
            )));
        }
        if !(self.wavenumber.is_finite() && self.omega.is_finite() && self.omega >= 0.0) {
            return Err(Error::input(
                "wavenumber and omega must be finite, omega >= 0",
            ));
        }
        Ok(())
    }

    pub fn period(&self) -> f64 {
        TAU / self.omega
    }
}

/// Rectangular fin planform, root line at y = 0 and leading edge at x = 0 (mm).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Planform {
    pub chord: f64,
    pub span: f64,
}

impl Planform {
    pub fn from_geometry(g: &RobotGeometry) -> Self {
        Self {
            chord: g.fin_chord(),
            span: g.fin_span(),
        }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        (0.0..=self.chord).contains(&x) && (0.0..=self.span).contains(&y)
    }
}

impl Default for Planform {
    fn default() -> Self {
        Self::from_geometry(&RobotGeometry::default())
    }
}

/// Vertical displacement (mm) at chordwise `x`, spanwise `y` (mm) and time `t` (s).
pub fn fin_surface(x: f64, y: f64, t: f64, p: &FinWaveParams, planform: &Planform) -> Result<f64> {
    if !planform.contains(x, y) {
        return Err(Error::input(format!(
            "({x}, {y}) mm lies outside the {}x{} mm fin planform",
            planform.chord, planform.span
        )));
    }
    Ok(swing_component(y, t, p) + wave_component(x, y, t, p, planform))
}

fn swing_component(y: f64, t: f64, p: &FinWaveParams) -> f64 {
    y * (p.swing_amplitude * (p.omega * t).sin()).tan()
}

fn wave_component(x: f64, y: f64, t: f64, p: &FinWaveParams, planform: &Planform) -> f64 {
    p.wave_amplitude
        * (y / planform.span)
        * (-p.decay * x).exp()
        * (p.wavenumber * x - p.omega * t + p.phase_delay).sin()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurfaceSample {
    pub x_mm: f64,
    pub y_mm: f64,
    pub t_s: f64,
    pub z_mm: f64,
}

/// Samples one period on an `nx` x `ny` planform grid at `nt` instants; t-major, then x, then y.
pub fn surface_grid(
    p: &FinWaveParams,
    planform: &Planform,
    nx: usize,
    ny: usize,
    nt: usize,
) -> Result<Vec<SurfaceSample>> {
    if nx < 2 || ny < 2 || nt < 1 {
        return Err(Error::input("surface grid needs nx, ny >= 2 and nt >= 1"));
    }
    if !(p.omega > 0.0) {
        return Err(Error::input("surface grid needs omega > 0"));
    }
    let mut out = Vec::with_capacity(nx * ny * nt);
    for it in 0..nt {
        let t = p.period() * it as f64 / nt as f64;
        for ix in 0..nx {
            let x = planform.chord * ix as f64 / (nx - 1) as f64;
            for iy in 0..ny {
                let y = planform.span * iy as f64 / (ny - 1) as f64;
                out.push(SurfaceSample {
                    x_mm: x,
                    y_mm: y,
                    t_s: t,
                    z_mm: fin_surface(x, y, t, p, planform)?,
                });
            }
        }
    }
    Ok(out)
}

/// Distance covered per flapping cycle (mm).
pub fn advance_per_cycle(speed_mm_s: f64, frequency_hz: f64) -> Result<f64> {
    if !(frequency_hz > 0.0) {
        return Err(Error::input(format!(
            "frequency must be > 0, got {frequency_hz}"
        )));
    }
    Ok(speed_mm_s / frequency_hz)
}

/// Rear hinge angle: the front trace delayed by `phase_delay / omega`, linearly interpolated.
/// Samples before the delay has elapsed are zero.
pub fn rear_hinge_trace(front: &FinTrace, phase_delay: f64) -> Vec<f64> {
    let delay_samples = phase_delay / (TAU * front.frequency_hz * front.dt);
    (0..front.angles.len())
        .map(|n| {
            let s = n as f64 - delay_samples;
            if s < 0.0 {
                return 0.0;
            }
            let i = s.floor() as usize;
            let frac = s - i as f64;
            let a = front.angles[i];
            let b = front.angles.get(i + 1).copied().unwrap_or(a);
            a + frac * (b - a)
        })
        .collect()
}

const MIN_PERIODIC_CORRELATION: f64 = 0.8;

/// Phase lag (rad, in [0, 2 pi)) of `rear` behind `front`, from the cross-correlation peak.
/// The period is estimated from the autocorrelation of `front`.
pub fn phase_delay_check(front: &[f64], rear: &[f64]) -> Result<f64> {
    if front.len() != rear.len() {
        return Err(Error::input(format!(
            "trace lengths differ: {} vs {}",
            front.len(),
            rear.len()
        )));
    }
    if front.len() < 8 {
        return Err(Error::Analysis("traces too short for correlation".into()));
    }
    let f = demean(front)?;
    let r = demean(rear)?;
    let period = estimate_period(&f)?;
    let max_lag = (period.ceil() as usize + 1).min(f.len() / 2);
    let xc: Vec<f64> = (0..=max_lag)
        .map(|lag| lagged_correlation(&f, &r, lag))
        .collect();
    let best = (0..xc.len())
        .max_by(|&a, &b| xc[a].total_cmp(&xc[b]))
        .expect("non-empty lag range");
    let lag = refine_peak(&xc, best);
    Ok((TAU * lag / period).rem_euclid(TAU))
}

fn demean(x: &[f64]) -> Result<Vec<f64>> {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let out: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let var = out.iter().map(|v| v * v).sum::<f64>();
    if !(var > 0.0) || !var.is_finite() {
        return Err(Error::Analysis("trace has no variation".into()));
    }
    Ok(out)
}

/// Correlation of `a[i]` with `b[i + lag]` over the overlap, normalized by the overlap energies.
fn lagged_correlation(a: &[f64], b: &[f64], lag: usize) -> f64 {
    let n = a.len() - lag;
    let sum: f64 = (0..n).map(|i| a[i] * b[i + lag]).sum();
    let ea: f64 = a[..n].iter().map(|v| v * v).sum();
    let eb: f64 = b[lag..].iter().map(|v| v * v).sum();
    sum / (ea * eb).sqrt()
}

fn estimate_period(x: &[f64]) -> Result<f64> {
    let max_lag = x.len() / 2;
    let ac: Vec<f64> = (0..=max_lag)
        .map(|lag| lagged_correlation(x, x, lag))
        .collect();
    let first_negative = ac.iter().position(|&v| v < 0.0).ok_or_else(|| {
        Error::Analysis("autocorrelation never turns negative; trace is aperiodic".into())
    })?;
    let best = (first_negative.max(1)..ac.len() - 1)
        .find(|&i| ac[i] >= ac[i - 1] && ac[i] >= ac[i + 1] && ac[i] >= MIN_PERIODIC_CORRELATION)
        .ok_or_else(|| Error::Analysis("no repeating pattern in trace".into()))?;
    Ok(refine_peak(&ac, best))
}

/// Parabolic interpolation of a discrete peak; edge peaks are returned unrefined.
fn refine_peak(y: &[f64], i: usize) -> f64 {
    if i == 0 || i + 1 >= y.len() {
        return i as f64;
    }
    let (a, b, c) = (y[i - 1], y[i], y[i + 1]);
    let denom = a - 2.0 * b + c;
    if denom >= 0.0 {
        return i as f64;
    }
    i as f64 + 0.5 * (a - c) / denom
}
