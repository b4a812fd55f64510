//! Speed-map sweeps and the frequency-versus-field sensitivity comparison.

use rayon::prelude::*;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::output::{csv, Provenance};
use crate::error::Result;
use crate::kinematics::advance_per_cycle;
use crate::locomotion::Swimmer;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub b_mt: f64,
    pub f_hz: f64,
    pub speed_mm_s: f64,
    pub beta_rad: f64,
    pub advance_mm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    /// Field-major grid order.
    pub rows: Vec<SweepRow>,
    pub provenance: Provenance,
}

impl SweepResult {
    pub fn speed(&self, b_mt: f64, f_hz: f64) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.b_mt == b_mt && r.f_hz == f_hz)
            .map(|r| r.speed_mm_s)
    }

    pub fn peak(&self) -> Option<&SweepRow> {
        self.rows
            .iter()
            .max_by(|a, b| a.speed_mm_s.total_cmp(&b.speed_mm_s))
    }

    pub fn to_csv(&self) -> String {
        let rows: Vec<[f64; 5]> = self
            .rows
            .iter()
            .map(|r| [r.b_mt, r.f_hz, r.speed_mm_s, r.beta_rad, r.advance_mm])
            .collect();
        csv(
            &self.provenance,
            &["B_mT", "f_Hz", "speed_mm_s", "beta_rad", "advance_mm"],
            &rows,
            6,
        )
    }
}

fn row(s: &Swimmer, b: f64, f: f64) -> Result<SweepRow> {
    let speed = s.steady_speed(b, f)?;
    Ok(SweepRow {
        b_mt: b,
        f_hz: f,
        speed_mm_s: speed,
        beta_rad: s.bending(b, f)?,
        advance_mm: advance_per_cycle(speed, f)?,
    })
}

/// Steady speeds over the configured B x f grid. B is the vertical drive amplitude.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.require_calibrated()?;
    let s = cfg.swimmer()?;
    let cells: Vec<(f64, f64)> = cfg
        .sweep_b_mt
        .iter()
        .flat_map(|&b| cfg.sweep_f_hz.iter().map(move |&f| (b, f)))
        .collect();
    let rows = cells
        .par_iter()
        .map(|&(b, f)| row(&s, b, f))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        rows,
        provenance: Provenance::new(cfg.hash()),
    })
}

pub const FREQUENCY_GROUP_B_MT: f64 = 5.0;
pub const FREQUENCY_GROUP_HZ: [f64; 4] = [3.0, 5.0, 7.0, 11.0];
pub const FIELD_GROUP_F_HZ: f64 = 7.0;
pub const FIELD_GROUP_MT: [f64; 4] = [2.25, 3.0, 4.0, 5.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SensitivityStep {
    pub from: f64,
    pub to: f64,
    pub speed_from: f64,
    pub speed_to: f64,
    pub delta_mm_s: f64,
    pub percent: f64,
}

impl SensitivityStep {
    fn new(from: f64, to: f64, speed_from: f64, speed_to: f64) -> Self {
        let delta = speed_to - speed_from;
        Self {
            from,
            to,
            speed_from,
            speed_to,
            delta_mm_s: delta,
            percent: 100.0 * delta / speed_from,
        }
    }
}

/// Comparison of the i-th frequency step against the i-th field step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepComparison {
    /// Upper frequency of the frequency step (Hz).
    pub upper_f_hz: f64,
    /// Frequency-step speed change over field-step speed change.
    pub ratio: f64,
    /// `upper_f_hz <= 5`: changes within a factor of 2. Otherwise the frequency change must be larger.
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityReport {
    pub frequency_group_b_mt: f64,
    pub frequency_steps: Vec<SensitivityStep>,
    pub field_group_f_hz: f64,
    pub field_steps: Vec<SensitivityStep>,
    pub comparisons: Vec<StepComparison>,
}

impl SensitivityReport {
    pub fn all_hold(&self) -> bool {
        self.comparisons.iter().all(|c| c.holds)
    }
}

fn consecutive_steps(points: &[(f64, f64)]) -> Vec<SensitivityStep> {
    points
        .windows(2)
        .map(|w| SensitivityStep::new(w[0].0, w[1].0, w[0].1, w[1].1))
        .collect()
}

pub fn sensitivity_compare(cfg: &ExperimentConfig) -> Result<SensitivityReport> {
    cfg.require_calibrated()?;
    let s = cfg.swimmer()?;
    let freq_speeds = FREQUENCY_GROUP_HZ
        .iter()
        .map(|&f| Ok((f, s.steady_speed(FREQUENCY_GROUP_B_MT, f)?)))
        .collect::<Result<Vec<_>>>()?;
    let field_speeds = FIELD_GROUP_MT
        .iter()
        .map(|&b| Ok((b, s.steady_speed(b, FIELD_GROUP_F_HZ)?)))
        .collect::<Result<Vec<_>>>()?;
    let frequency_steps = consecutive_steps(&freq_speeds);
    let field_steps = consecutive_steps(&field_speeds);
    let comparisons = frequency_steps
        .iter()
        .zip(&field_steps)
        .map(|(fs, bs)| {
            let ratio = fs.delta_mm_s.abs() / bs.delta_mm_s.abs();
            let holds = if fs.to <= 5.0 {
                (0.5..=2.0).contains(&ratio)
            } else {
                ratio > 1.0
            };
            StepComparison {
                upper_f_hz: fs.to,
                ratio,
                holds,
            }
        })
        .collect();
    Ok(SensitivityReport {
        frequency_group_b_mt: FREQUENCY_GROUP_B_MT,
        frequency_steps,
        field_group_f_hz: FIELD_GROUP_F_HZ,
        field_steps,
        comparisons,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::harness::calibrate::calibrate;

    #[test]
    fn uncalibrated_sweep_is_refused() {
        let cfg = ExperimentConfig::default();
        assert!(matches!(run_sweep(&cfg), Err(Error::NotCalibrated)));
        assert!(matches!(
            sensitivity_compare(&cfg),
            Err(Error::NotCalibrated)
        ));
    }

    #[test]
    fn default_grid_has_35_rows_in_field_major_order() {
        let cfg = calibrate(&ExperimentConfig::default()).unwrap().config;
        let r = run_sweep(&cfg).unwrap();
        assert_eq!(r.rows.len(), 35);
        assert_eq!((r.rows[0].b_mt, r.rows[0].f_hz), (1.5, 1.0));
        assert_eq!((r.rows[7].b_mt, r.rows[7].f_hz), (2.25, 1.0));
        assert!(r.rows.iter().all(|row| row.speed_mm_s >= 0.0));
        for &f in &cfg.sweep_f_hz {
            assert!(r.speed(1.5, f).unwrap() <= r.speed(5.0, f).unwrap());
        }
        assert_eq!(
            r.to_csv().lines().nth(1).unwrap(),
            "B_mT,f_Hz,speed_mm_s,beta_rad,advance_mm"
        );
    }

    #[test]
    fn sensitivity_groups_are_the_listed_ones() {
        let cfg = calibrate(&ExperimentConfig::default()).unwrap().config;
        let rep = sensitivity_compare(&cfg).unwrap();
        let f: Vec<(f64, f64)> = rep.frequency_steps.iter().map(|s| (s.from, s.to)).collect();
        assert_eq!(f, vec![(3.0, 5.0), (5.0, 7.0), (7.0, 11.0)]);
        let b: Vec<(f64, f64)> = rep.field_steps.iter().map(|s| (s.from, s.to)).collect();
        assert_eq!(b, vec![(2.25, 3.0), (3.0, 4.0), (4.0, 5.0)]);
        assert_eq!(rep.frequency_group_b_mt, 5.0);
        assert_eq!(rep.field_group_f_hz, 7.0);
    }
}
