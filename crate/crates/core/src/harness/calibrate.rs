//! Fit of thrust coefficient and hinge stiffness/damping to the peak speed and the
//! speed-map trend constraints.

use serde::Serialize;

use super::config::{CalibrationStatus, ExperimentConfig};
use crate::error::{Error, Result};
use crate::locomotion::Swimmer;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationTargets {
    pub peak_b_mt: f64,
    pub peak_f_hz: f64,
    pub peak_speed_mm_s: f64,
    pub fields_mt: Vec<f64>,
    pub frequencies_hz: Vec<f64>,
}

impl CalibrationTargets {
    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        Self {
            peak_b_mt: 5.0,
            peak_f_hz: 11.0,
            peak_speed_mm_s: 5.25,
            fields_mt: cfg.sweep_b_mt.clone(),
            frequencies_hz: cfg.sweep_f_hz.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationReport {
    pub thrust_coeff: f64,
    pub stiffness: f64,
    pub damping: f64,
    /// C_t M_r^2 / C_d, the combination the speed map actually constrains.
    pub speed_lump: f64,
    pub objective: f64,
    pub passes: usize,
    pub peak_speed_mm_s: f64,
}

#[derive(Debug, Clone)]
pub struct Calibration {
    pub config: ExperimentConfig,
    pub report: CalibrationReport,
}

const PENALTY_WEIGHT: f64 = 100.0;
const CONVERGENCE: f64 = 1e-8;
const MAX_PASSES: usize = 200;
const LINE_HALF_WIDTH: f64 = 1.0;
const GOLDEN_ITERATIONS: usize = 80;

fn speeds_over_f(s: &Swimmer, b: f64, fs: &[f64]) -> Result<Vec<f64>> {
    fs.iter().map(|&f| s.steady_speed(b, f)).collect()
}

/// Named trend constraints with their hinge violations (0 when satisfied).
fn violations(s: &Swimmer, t: &CalibrationTargets) -> Result<Vec<(String, f64)>> {
    let mut out = Vec::new();
    let peak_idx = t
        .frequencies_hz
        .iter()
        .position(|&f| f == t.peak_f_hz)
        .ok_or_else(|| Error::config(format!("sweep.f_hz must include {} Hz", t.peak_f_hz)))?;
    let v = speeds_over_f(s, t.peak_b_mt, &t.frequencies_hz)?;
    let scale = t.peak_speed_mm_s;
    for i in 0..v.len().saturating_sub(1) {
        let (f0, f1) = (t.frequencies_hz[i], t.frequencies_hz[i + 1]);
        let gap = if i < peak_idx {
            v[i] - v[i + 1]
        } else {
            v[i + 1] - v[i]
        };
        let dir = if i < peak_idx { "rise" } else { "fall" };
        out.push((
            format!(
                "speed must {dir} from {f0} to {f1} Hz at {} mT",
                t.peak_b_mt
            ),
            gap.max(0.0) / scale,
        ));
    }
    for &f in &t.frequencies_hz {
        let vb: Vec<f64> = t
            .fields_mt
            .iter()
            .map(|&b| s.steady_speed(b, f))
            .collect::<Result<_>>()?;
        for (i, w) in vb.windows(2).enumerate() {
            if t.fields_mt[i + 1] > t.fields_mt[i] {
                out.push((
                    format!(
                        "speed must grow from {} to {} mT at {f} Hz",
                        t.fields_mt[i],
                        t.fields_mt[i + 1]
                    ),
                    (w[0] - w[1]).max(0.0) / scale,
                ));
            }
        }
    }
    for &b in &t.fields_mt {
        if b == 0.0 {
            continue;
        }
        let betas: Vec<f64> = t
            .frequencies_hz
            .iter()
            .map(|&f| s.bending(b, f))
            .collect::<Result<_>>()?;
        let beta0 = betas.iter().copied().fold(f64::MIN_POSITIVE, f64::max);
        for (i, w) in betas.windows(2).enumerate() {
            out.push((
                format!(
                    "fin amplitude must fall from {} to {} Hz at {b} mT",
                    t.frequencies_hz[i],
                    t.frequencies_hz[i + 1]
                ),
                (w[1] - w[0]).max(0.0) / beta0,
            ));
        }
    }
    Ok(out)
}

/// Strict form of the trend checks: equal neighbours count as violations.
pub fn violated_constraints(s: &Swimmer, t: &CalibrationTargets) -> Result<Vec<String>> {
    let mut out: Vec<String> = violations(s, t)?
        .into_iter()
        .filter(|(_, v)| *v > 0.0)
        .map(|(n, _)| n)
        .collect();
    let v = speeds_over_f(s, t.peak_b_mt, &t.frequencies_hz)?;
    let argmax = (0..v.len())
        .max_by(|&a, &b| v[a].total_cmp(&v[b]))
        .unwrap_or(0);
    if t.frequencies_hz.get(argmax) != Some(&t.peak_f_hz)
        || v.iter().filter(|&&x| x == v[argmax]).count() > 1
    {
        out.push(format!(
            "speed maximum at {} mT is not uniquely at {} Hz",
            t.peak_b_mt, t.peak_f_hz
        ));
    }
    Ok(out)
}

fn objective(s: &Swimmer, t: &CalibrationTargets) -> Result<f64> {
    let v = s.steady_speed(t.peak_b_mt, t.peak_f_hz)?;
    let e = (v - t.peak_speed_mm_s) / t.peak_speed_mm_s;
    let penalty: f64 = violations(s, t)?.iter().map(|(_, v)| v * v).sum();
    Ok(e * e + PENALTY_WEIGHT * penalty)
}

fn with_params(base: &Swimmer, ln: [f64; 3]) -> Swimmer {
    let mut s = *base;
    s.hydro.thrust_coeff = ln[0].exp();
    s.osc.stiffness = ln[1].exp();
    s.osc.damping = ln[2].exp();
    s
}

/// Golden-section search of one log-parameter over `[x - w, x + w]`; keeps `x` unless the
/// best point found beats it.
fn line_search(
    base: &Swimmer,
    t: &CalibrationTargets,
    ln: &mut [f64; 3],
    k: usize,
    current: f64,
) -> Result<f64> {
    let eval = |x: f64, ln: &[f64; 3]| -> Result<f64> {
        let mut p = *ln;
        p[k] = x;
        objective(&with_params(base, p), t)
    };
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (ln[k] - LINE_HALF_WIDTH, ln[k] + LINE_HALF_WIDTH);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (eval(c, ln)?, eval(d, ln)?);
    for _ in 0..GOLDEN_ITERATIONS {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = eval(c, ln)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = eval(d, ln)?;
        }
    }
    let (x, fx) = if fc < fd { (c, fc) } else { (d, fd) };
    if fx < current {
        ln[k] = x;
        Ok(fx)
    } else {
        Ok(current)
    }
}

/// Coordinate descent on ln(C_t), ln(k), ln(c) from the configured values.
/// Inertia, magnetization, drag and the heading parameters are held.
pub fn calibrate(cfg: &ExperimentConfig) -> Result<Calibration> {
    cfg.validate()?;
    let targets = CalibrationTargets::from_config(cfg);
    if !targets.fields_mt.contains(&targets.peak_b_mt) {
        return Err(Error::config(format!(
            "sweep.b_mt must include {} mT",
            targets.peak_b_mt
        )));
    }
    let base = cfg.swimmer()?;
    let mut ln = [
        base.hydro.thrust_coeff.ln(),
        base.osc.stiffness.ln(),
        base.osc.damping.ln(),
    ];
    let mut current = objective(&base, &targets)?;
    let mut passes = 0;
    loop {
        passes += 1;
        let before = current;
        for k in 0..3 {
            current = line_search(&base, &targets, &mut ln, k, current)?;
        }
        log::debug!("calibration pass {passes}: objective {current:.3e}");
        if before - current < CONVERGENCE || passes == MAX_PASSES {
            break;
        }
    }
    let fitted = with_params(&base, ln);
    let violated = violated_constraints(&fitted, &targets)?;
    let peak = fitted.steady_speed(targets.peak_b_mt, targets.peak_f_hz)?;
    if (peak - targets.peak_speed_mm_s).abs() / targets.peak_speed_mm_s > 0.02 {
        let mut v = violated.clone();
        v.push(format!(
            "peak speed {peak:.4} mm/s misses {} mm/s by more than 2%",
            targets.peak_speed_mm_s
        ));
        return Err(Error::Calibration { violated: v });
    }
    if !violated.is_empty() {
        return Err(Error::Calibration { violated });
    }
    let mut config = cfg.clone();
    config.hydro = fitted.hydro;
    config.osc = fitted.osc;
    config.calibration = CalibrationStatus::Fitted;
    let report = CalibrationReport {
        thrust_coeff: fitted.hydro.thrust_coeff,
        stiffness: fitted.osc.stiffness,
        damping: fitted.osc.damping,
        speed_lump: fitted.hydro.thrust_coeff * fitted.fin.magnetization.powi(2)
            / fitted.hydro.drag_coeff,
        objective: current,
        passes,
        peak_speed_mm_s: peak,
    };
    Ok(Calibration { config, report })
}
