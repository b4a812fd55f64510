//! Trajectory experiments and the field/surface reports behind the CLI.

use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::ExperimentConfig;
use super::output::{csv, json, trajectory_csv, trajectory_svg, write_file, Provenance};
use crate::control::{deviation_metrics, simulate_plan, DeviationMetrics, TrajectoryPlan};
use crate::error::{Error, Result};
use crate::field::{scan_grid, Axis, DeviationGrid};
use crate::kinematics::{surface_grid, FinWaveParams, Planform};
use crate::locomotion::TrajectoryRecord;

#[derive(Debug, Clone, Serialize)]
pub struct MetricsReport {
    pub plan: String,
    pub yaws_deg: Vec<f64>,
    pub yaw_epochs: usize,
    pub duration_s: f64,
    pub final_position_mm: [f64; 2],
    pub metrics: DeviationMetrics,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub plan: TrajectoryPlan,
    pub record: TrajectoryRecord,
    pub metrics: DeviationMetrics,
    pub csv: String,
    pub json: String,
    pub svg: String,
}

impl ExperimentOutcome {
    /// Writes `<plan>_trajectory.csv`, `<plan>_metrics.json` and `<plan>_trajectory.svg`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let stem = &self.plan.name;
        Ok(vec![
            write_file(dir, &format!("{stem}_trajectory.csv"), &self.csv)?,
            write_file(dir, &format!("{stem}_metrics.json"), &self.json)?,
            write_file(dir, &format!("{stem}_trajectory.svg"), &self.svg)?,
        ])
    }
}

pub fn run_experiment(cfg: &ExperimentConfig, plan_name: &str) -> Result<ExperimentOutcome> {
    cfg.require_calibrated()?;
    let plan = cfg.trajectory_plan(plan_name)?;
    let swimmer = cfg.swimmer()?;
    let record = simulate_plan(&swimmer, &plan, cfg.dt_s())?;
    let metrics = deviation_metrics(&record, &plan.target)?;
    let prov = Provenance::new(cfg.hash());
    let last = record
        .final_state()
        .ok_or_else(|| Error::Analysis("empty trajectory".into()))?;
    let report = MetricsReport {
        plan: plan.name.clone(),
        yaws_deg: plan.schedule.yaws(),
        yaw_epochs: record.yaw_epochs(),
        duration_s: record.samples.last().map_or(0.0, |s| s.t),
        final_position_mm: [last.x, last.y],
        metrics,
    };
    let title = format!(
        "{} plan, B = {} mT, f = {} Hz, pitch {} deg",
        plan.name, cfg.plan.b_mt, cfg.plan.f_hz, cfg.plan.pitch_deg
    );
    Ok(ExperimentOutcome {
        csv: trajectory_csv(&prov, &record),
        json: json(&prov, &report)?,
        svg: trajectory_svg(&prov, &title, &record, &plan.target),
        plan,
        record,
        metrics,
    })
}

/// Field samples with every axis driven at `current_a`, as CSV.
pub fn field_scan_csv(
    cfg: &ExperimentConfig,
    current_a: f64,
    half_extent_mm: f64,
) -> Result<String> {
    let samples = scan_grid(&cfg.coil, [current_a; 3], half_extent_mm, cfg.grid_step_mm)?;
    let rows: Vec<[f64; 6]> = samples
        .iter()
        .map(|s| {
            [
                s.point_mm[0],
                s.point_mm[1],
                s.point_mm[2],
                s.b_mt[0],
                s.b_mt[1],
                s.b_mt[2],
            ]
        })
        .collect();
    Ok(csv(
        &Provenance::new(cfg.hash()),
        &["x_mm", "y_mm", "z_mm", "Bx_mT", "By_mT", "Bz_mT"],
        &rows,
        6,
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct HomogeneityEntry {
    pub tolerance: f64,
    /// Origin-centred box valid for every single-axis configuration (mm).
    pub intersected_box_mm: [f64; 3],
    /// Largest uniform cube edge of each coil pair alone, X, Y, Z (mm).
    pub per_axis_cube_mm: [f64; 3],
}

#[derive(Debug, Clone, Serialize)]
pub struct HomogeneityReport {
    pub grid_step_mm: f64,
    pub current_a: f64,
    pub entries: Vec<HomogeneityEntry>,
}

pub fn homogeneity_report(cfg: &ExperimentConfig, current_a: f64) -> Result<HomogeneityReport> {
    let max_tol = cfg.tolerances.iter().copied().fold(0.0, f64::max);
    let grid = DeviationGrid::scan(&cfg.coil, [current_a; 3], max_tol, cfg.grid_step_mm)?;
    let per_axis = Axis::ALL
        .iter()
        .map(|&axis| {
            let mut currents = [0.0; 3];
            currents[axis.index()] = current_a;
            DeviationGrid::scan(&cfg.coil, currents, max_tol, cfg.grid_step_mm)
        })
        .collect::<Result<Vec<_>>>()?;
    let entries = cfg
        .tolerances
        .iter()
        .map(|&tol| HomogeneityEntry {
            tolerance: tol,
            intersected_box_mm: grid.largest_box(tol).as_array(),
            per_axis_cube_mm: std::array::from_fn(|i| per_axis[i].largest_cube(tol)),
        })
        .collect();
    Ok(HomogeneityReport {
        grid_step_mm: cfg.grid_step_mm,
        current_a,
        entries,
    })
}

/// One period of the fin surface at the plan frequency; columns x_mm, y_mm, t_s, z_mm.
pub fn surface_csv(cfg: &ExperimentConfig, nx: usize, ny: usize, nt: usize) -> Result<String> {
    let wave = FinWaveParams {
        omega: std::f64::consts::TAU * cfg.plan.f_hz,
        ..cfg.wave
    };
    let samples = surface_grid(&wave, &Planform::from_geometry(&cfg.geometry), nx, ny, nt)?;
    let rows: Vec<[f64; 4]> = samples
        .iter()
        .map(|s| [s.x_mm, s.y_mm, s.t_s, s.z_mm])
        .collect();
    Ok(csv(
        &Provenance::new(cfg.hash()),
        &["x_mm", "y_mm", "t_s", "z_mm"],
        &rows,
        6,
    ))
}
