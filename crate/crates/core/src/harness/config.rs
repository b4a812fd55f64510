//! Flat `key = value` experiment configuration.
//!
//! One assignment per line, `#` starts a comment, keys are dotted paths and lists are
//! comma separated. Unknown keys are rejected. `serialize` writes every key in a fixed
//! order, so the output of `serialize` is the normalized form used for hashing.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use sha2::{Digest, Sha256};

use crate::actuation::{FinOscillator, MagnetizedFin};
use crate::control::{
    builtin_schedule, Extent, ScheduleMode, TrajectoryPlan, YawSchedule, YawSegment,
    DEFAULT_DWELL_S, DEFAULT_LEG_MM, PLAN_FIELD_MT, PLAN_FREQUENCY_HZ, PLAN_PITCH_DEG,
};
use crate::error::{Error, Result};
use crate::field::{Axis, DriveSignal, LoopKernel, TriaxialCoil};
use crate::geometry::{magnetized_volume, RobotGeometry};
use crate::kinematics::FinWaveParams;
use crate::locomotion::{HydroParams, Swimmer};

pub const DEFAULT_FIELDS_MT: [f64; 5] = [1.5, 2.25, 3.0, 4.0, 5.0];
pub const DEFAULT_FREQUENCIES_HZ: [f64; 7] = [1.0, 3.0, 5.0, 7.0, 11.0, 13.0, 15.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CalibrationStatus {
    Default,
    Fitted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanConfig {
    /// `Z`, `square`, `nabla` or `file`.
    pub name: String,
    pub mode: ScheduleMode,
    pub leg: f64,
    pub dwell_s: f64,
    /// Segments for `file` plans.
    pub segments: Vec<YawSegment>,
    pub b_mt: f64,
    pub f_hz: f64,
    pub pitch_deg: f64,
}

impl Default for PlanConfig {
    fn default() -> Self {
        Self {
            name: "Z".into(),
            mode: ScheduleMode::Distance,
            leg: DEFAULT_LEG_MM,
            dwell_s: DEFAULT_DWELL_S,
            segments: Vec::new(),
            b_mt: PLAN_FIELD_MT,
            f_hz: PLAN_FREQUENCY_HZ,
            pitch_deg: PLAN_PITCH_DEG,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub geometry: RobotGeometry,
    pub coil: TriaxialCoil,
    pub magnetization: f64,
    pub osc: FinOscillator,
    pub hydro: HydroParams,
    pub wave: FinWaveParams,
    pub sweep_b_mt: Vec<f64>,
    pub sweep_f_hz: Vec<f64>,
    pub plan: PlanConfig,
    pub dt_ms: f64,
    pub grid_step_mm: f64,
    pub tolerances: Vec<f64>,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub calibration: CalibrationStatus,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            geometry: RobotGeometry::default(),
            coil: TriaxialCoil::default(),
            magnetization: 6.0e4,
            osc: FinOscillator::default(),
            hydro: HydroParams::default(),
            wave: FinWaveParams::default(),
            sweep_b_mt: DEFAULT_FIELDS_MT.to_vec(),
            sweep_f_hz: DEFAULT_FREQUENCIES_HZ.to_vec(),
            plan: PlanConfig::default(),
            dt_ms: 1.0,
            grid_step_mm: 2.0,
            tolerances: vec![0.01, 0.02, 0.05],
            output_dir: PathBuf::from("out"),
            seed: 0,
            calibration: CalibrationStatus::Default,
        }
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    let x: f64 = v
        .parse()
        .map_err(|_| Error::config(format!("{key}: expected a number, got {v:?}")))?;
    if !x.is_finite() {
        return Err(Error::config(format!("{key}: value must be finite")));
    }
    Ok(x)
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',').map(|s| parse_f64(key, s.trim())).collect()
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(", ")
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = BTreeMap::new();
        let mut yaws: Option<Vec<f64>> = None;
        let mut extents: Option<Vec<Extent>> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            if seen.insert(key.to_string(), lineno + 1).is_some() {
                return Err(Error::config(format!(
                    "line {}: duplicate key {key}",
                    lineno + 1
                )));
            }
            match key {
                "plan.yaws_deg" => yaws = Some(parse_list(key, value)?),
                "plan.extents" => {
                    extents = Some(value.split(',').map(Extent::parse).collect::<Result<_>>()?);
                }
                _ => cfg.assign(key, value)?,
            }
        }
        match (yaws, extents) {
            (Some(y), Some(e)) => {
                if y.len() != e.len() {
                    return Err(Error::config(format!(
                        "plan.yaws_deg has {} entries but plan.extents has {}",
                        y.len(),
                        e.len()
                    )));
                }
                cfg.plan.segments = e
                    .into_iter()
                    .zip(y)
                    .map(|(extent, yaw_deg)| YawSegment { extent, yaw_deg })
                    .collect();
            }
            (None, None) => {}
            _ => {
                return Err(Error::config(
                    "plan.yaws_deg and plan.extents must be given together",
                ))
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn assign(&mut self, key: &str, v: &str) -> Result<()> {
        let num = || parse_f64(key, v);
        let g = &mut self.geometry;
        match key {
            "geometry.body_length_mm" => g.body_length = num()?,
            "geometry.body_width_mm" => g.body_width = num()?,
            "geometry.body_height_mm" => g.body_height = num()?,
            "geometry.overall_width_mm" => g.overall_width = num()?,
            "geometry.front_fin.width_mm" => g.front_fin.width = num()?,
            "geometry.front_fin.length_mm" => g.front_fin.length = num()?,
            "geometry.front_fin.thickness_mm" => g.front_fin.thickness = num()?,
            "geometry.rear_fin.width_mm" => g.rear_fin.width = num()?,
            "geometry.rear_fin.length_mm" => g.rear_fin.length = num()?,
            "geometry.rear_fin.thickness_mm" => g.rear_fin.thickness = num()?,
            "coil.segments" => {
                let n: usize = v
                    .parse()
                    .map_err(|_| Error::config(format!("{key}: expected a count, got {v:?}")))?;
                self.coil.kernel = LoopKernel {
                    segments: n,
                    ..self.coil.kernel
                };
            }
            "fin.magnetization_a_per_m" => self.magnetization = num()?,
            "actuation.inertia" => self.osc.inertia = num()?,
            "actuation.damping" => self.osc.damping = num()?,
            "actuation.stiffness" => self.osc.stiffness = num()?,
            "actuation.max_deflection_rad" => self.osc.max_deflection = num()?,
            "hydro.mass_kg" => self.hydro.mass = num()?,
            "hydro.thrust_coeff" => self.hydro.thrust_coeff = num()?,
            "hydro.drag_coeff" => self.hydro.drag_coeff = num()?,
            "hydro.heading_omega" => self.hydro.heading_omega = num()?,
            "hydro.heading_damping" => self.hydro.heading_damping = num()?,
            "hydro.field_gain" => self.hydro.field_gain = num()?,
            "kinematics.swing_amplitude_rad" => self.wave.swing_amplitude = num()?,
            "kinematics.wave_amplitude_mm" => self.wave.wave_amplitude = num()?,
            "kinematics.decay_per_mm" => self.wave.decay = num()?,
            "kinematics.wavenumber_per_mm" => self.wave.wavenumber = num()?,
            "kinematics.phase_delay_rad" => self.wave.phase_delay = num()?,
            "sweep.b_mt" => self.sweep_b_mt = parse_list(key, v)?,
            "sweep.f_hz" => self.sweep_f_hz = parse_list(key, v)?,
            "plan.name" => self.plan.name = v.to_string(),
            "plan.mode" => {
                self.plan.mode = match v {
                    "distance" => ScheduleMode::Distance,
                    "time" => ScheduleMode::Time,
                    _ => {
                        return Err(Error::config(format!(
                            "{key}: expected distance or time, got {v:?}"
                        )))
                    }
                }
            }
            "plan.leg" => self.plan.leg = num()?,
            "plan.dwell_s" => self.plan.dwell_s = num()?,
            "plan.b_mt" => self.plan.b_mt = num()?,
            "plan.f_hz" => self.plan.f_hz = num()?,
            "plan.pitch_deg" => self.plan.pitch_deg = num()?,
            "integrator.dt_ms" => self.dt_ms = num()?,
            "field.grid_step_mm" => self.grid_step_mm = num()?,
            "field.tolerances" => self.tolerances = parse_list(key, v)?,
            "output.dir" => self.output_dir = PathBuf::from(v),
            "seed" => {
                self.seed = v.parse().map_err(|_| {
                    Error::config(format!("seed: expected an unsigned integer, got {v:?}"))
                })?;
            }
            "calibration.status" => {
                self.calibration = match v {
                    "default" => CalibrationStatus::Default,
                    "fitted" => CalibrationStatus::Fitted,
                    _ => {
                        return Err(Error::config(format!(
                            "{key}: expected default or fitted, got {v:?}"
                        )))
                    }
                }
            }
            _ => return self.assign_coil(key, v),
        }
        Ok(())
    }

    fn assign_coil(&mut self, key: &str, v: &str) -> Result<()> {
        let unknown = || Error::config(format!("unknown key {key}"));
        let rest = key.strip_prefix("coil.").ok_or_else(unknown)?;
        let (axis, field) = rest.split_once('.').ok_or_else(unknown)?;
        let axis = match axis {
            "x" => Axis::X,
            "y" => Axis::Y,
            "z" => Axis::Z,
            _ => return Err(unknown()),
        };
        let c = &mut self.coil.axes[axis.index()];
        match field {
            "turns" => {
                c.turns = v
                    .parse()
                    .map_err(|_| Error::config(format!("{key}: expected a count, got {v:?}")))?;
            }
            "resistance_ohm" => c.resistance_ohm = parse_f64(key, v)?,
            "effective_radius_mm" => c.effective_radius_mm = parse_f64(key, v)?,
            "inner_diameter_mm" => c.inner_diameter_mm = parse_f64(key, v)?,
            "outer_diameter_mm" => c.outer_diameter_mm = parse_f64(key, v)?,
            _ => return Err(unknown()),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let wrap = |e: Error| match e {
            Error::Input(m) | Error::Analysis(m) => Error::Config(m),
            other => other,
        };
        self.geometry.validate().map_err(wrap)?;
        self.coil.validate().map_err(wrap)?;
        self.swimmer().map_err(wrap)?.validate().map_err(wrap)?;
        self.wave.validate(self.osc.max_deflection).map_err(wrap)?;
        if self.sweep_b_mt.is_empty() || self.sweep_f_hz.is_empty() {
            return Err(Error::config("sweep grids must be non-empty"));
        }
        if self.sweep_b_mt.iter().any(|&b| b < 0.0) || self.sweep_f_hz.iter().any(|&f| f <= 0.0) {
            return Err(Error::config(
                "sweep fields must be >= 0 and frequencies > 0",
            ));
        }
        if !(self.dt_ms > 0.0) {
            return Err(Error::config("integrator.dt_ms must be > 0"));
        }
        if !(self.grid_step_mm > 0.0) {
            return Err(Error::config("field.grid_step_mm must be > 0"));
        }
        if self.tolerances.is_empty() || self.tolerances.iter().any(|&t| !(t > 0.0 && t < 1.0)) {
            return Err(Error::config(
                "field.tolerances must be fractions in (0, 1)",
            ));
        }
        if self.plan.name == "file" && self.plan.segments.is_empty() {
            return Err(Error::config(
                "plan.name = file needs plan.yaws_deg and plan.extents",
            ));
        }
        Ok(())
    }

    pub fn dt_s(&self) -> f64 {
        self.dt_ms * 1e-3
    }

    pub fn swimmer(&self) -> Result<Swimmer> {
        Ok(Swimmer {
            fin: MagnetizedFin::new(
                magnetized_volume(&self.geometry)?.value(),
                self.magnetization,
            ),
            osc: self.osc,
            hydro: self.hydro,
        })
    }

    pub fn require_calibrated(&self) -> Result<()> {
        match self.calibration {
            CalibrationStatus::Fitted => Ok(()),
            CalibrationStatus::Default => Err(Error::NotCalibrated),
        }
    }

    pub fn plan_drive(&self) -> DriveSignal {
        DriveSignal::with_pitch(self.plan.b_mt, self.plan.pitch_deg, 0.0, self.plan.f_hz)
    }

    /// Resolves a plan by name; `file` uses the configured segments.
    pub fn trajectory_plan(&self, name: &str) -> Result<TrajectoryPlan> {
        let schedule = if name == "file" {
            if self.plan.segments.is_empty() {
                return Err(Error::config(
                    "plan file needs plan.yaws_deg and plan.extents",
                ));
            }
            let mut s = YawSchedule::new(self.plan.mode);
            s.segments = self
                .plan
                .segments
                .iter()
                .map(|seg| YawSegment {
                    yaw_deg: crate::control::wrap_deg(seg.yaw_deg),
                    ..*seg
                })
                .collect();
            s
        } else {
            let mut s = builtin_schedule(name, self.plan.leg, self.plan.dwell_s)?;
            if self.plan.mode == ScheduleMode::Time {
                s.mode = ScheduleMode::Time;
                for seg in &mut s.segments {
                    if let Extent::Distance(d) = seg.extent {
                        seg.extent = Extent::Duration(d);
                    }
                }
            }
            s
        };
        let drive = self.plan_drive();
        let cruise = self
            .swimmer()?
            .steady_speed(drive.b_z_mt, drive.frequency_hz)?;
        TrajectoryPlan::new(name, schedule, drive, cruise)
    }

    /// Normalized text form; parsing it yields an equal config.
    pub fn serialize(&self) -> String {
        let mut s = self.serialize_body();
        let _ = writeln!(s, "output.dir = {}", self.output_dir.display());
        s
    }

    /// Everything except the output directory, which does not influence results.
    fn serialize_body(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        let g = &self.geometry;
        kv("geometry.body_length_mm", g.body_length.to_string());
        kv("geometry.body_width_mm", g.body_width.to_string());
        kv("geometry.body_height_mm", g.body_height.to_string());
        kv("geometry.overall_width_mm", g.overall_width.to_string());
        for (name, fin) in [("front_fin", &g.front_fin), ("rear_fin", &g.rear_fin)] {
            kv(&format!("geometry.{name}.width_mm"), fin.width.to_string());
            kv(
                &format!("geometry.{name}.length_mm"),
                fin.length.to_string(),
            );
            kv(
                &format!("geometry.{name}.thickness_mm"),
                fin.thickness.to_string(),
            );
        }
        kv("coil.segments", self.coil.kernel.segments.to_string());
        for c in &self.coil.axes {
            let a = c.axis.name().to_lowercase();
            kv(&format!("coil.{a}.turns"), c.turns.to_string());
            kv(
                &format!("coil.{a}.resistance_ohm"),
                c.resistance_ohm.to_string(),
            );
            kv(
                &format!("coil.{a}.effective_radius_mm"),
                c.effective_radius_mm.to_string(),
            );
            kv(
                &format!("coil.{a}.inner_diameter_mm"),
                c.inner_diameter_mm.to_string(),
            );
            kv(
                &format!("coil.{a}.outer_diameter_mm"),
                c.outer_diameter_mm.to_string(),
            );
        }
        kv("fin.magnetization_a_per_m", self.magnetization.to_string());
        kv("actuation.inertia", self.osc.inertia.to_string());
        kv("actuation.damping", self.osc.damping.to_string());
        kv("actuation.stiffness", self.osc.stiffness.to_string());
        kv(
            "actuation.max_deflection_rad",
            self.osc.max_deflection.to_string(),
        );
        let h = &self.hydro;
        kv("hydro.mass_kg", h.mass.to_string());
        kv("hydro.thrust_coeff", h.thrust_coeff.to_string());
        kv("hydro.drag_coeff", h.drag_coeff.to_string());
        kv("hydro.heading_omega", h.heading_omega.to_string());
        kv("hydro.heading_damping", h.heading_damping.to_string());
        kv("hydro.field_gain", h.field_gain.to_string());
        let w = &self.wave;
        kv(
            "kinematics.swing_amplitude_rad",
            w.swing_amplitude.to_string(),
        );
        kv("kinematics.wave_amplitude_mm", w.wave_amplitude.to_string());
        kv("kinematics.decay_per_mm", w.decay.to_string());
        kv("kinematics.wavenumber_per_mm", w.wavenumber.to_string());
        kv("kinematics.phase_delay_rad", w.phase_delay.to_string());
        kv("sweep.b_mt", fmt_list(&self.sweep_b_mt));
        kv("sweep.f_hz", fmt_list(&self.sweep_f_hz));
        let p = &self.plan;
        kv("plan.name", p.name.clone());
        kv(
            "plan.mode",
            match p.mode {
                ScheduleMode::Distance => "distance".into(),
                ScheduleMode::Time => "time".into(),
            },
        );
        kv("plan.leg", p.leg.to_string());
        kv("plan.dwell_s", p.dwell_s.to_string());
        if !p.segments.is_empty() {
            kv(
                "plan.yaws_deg",
                fmt_list(&p.segments.iter().map(|s| s.yaw_deg).collect::<Vec<_>>()),
            );
            kv(
                "plan.extents",
                p.segments
                    .iter()
                    .map(|s| s.extent.to_string())
                    .collect::<Vec<_>>()
                    .join(", "),
            );
        }
        kv("plan.b_mt", p.b_mt.to_string());
        kv("plan.f_hz", p.f_hz.to_string());
        kv("plan.pitch_deg", p.pitch_deg.to_string());
        kv("integrator.dt_ms", self.dt_ms.to_string());
        kv("field.grid_step_mm", self.grid_step_mm.to_string());
        kv("field.tolerances", fmt_list(&self.tolerances));
        kv("seed", self.seed.to_string());
        kv(
            "calibration.status",
            match self.calibration {
                CalibrationStatus::Default => "default".into(),
                CalibrationStatus::Fitted => "fitted".into(),
            },
        );
        s
    }

    /// SHA-256 of the normalized form without the output directory, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.serialize_body().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_is_the_default() {
        assert_eq!(
            ExperimentConfig::parse("").unwrap(),
            ExperimentConfig::default()
        );
        assert_eq!(
            ExperimentConfig::parse("# nothing\n\n").unwrap(),
            ExperimentConfig::default()
        );
    }

    #[test]
    fn assignments_and_comments() {
        let cfg = ExperimentConfig::parse(
            "coil.z.turns = 500 # more turns\nsweep.f_hz = 1, 11\nintegrator.dt_ms = 0.5\nplan.name = square\n",
        )
        .unwrap();
        assert_eq!(cfg.coil.axes[2].turns, 500);
        assert_eq!(cfg.sweep_f_hz, vec![1.0, 11.0]);
        assert_eq!(cfg.dt_ms, 0.5);
        assert_eq!(cfg.plan.name, "square");
    }

    #[test]
    fn errors_are_config_errors() {
        for bad in [
            "no equals sign",
            "unknown.key = 1",
            "hydro.drag_coeff = fast",
            "hydro.drag_coeff = -1",
            "sweep.b_mt = ",
            "seed = 1\nseed = 2",
            "plan.yaws_deg = 0, 10",
            "plan.yaws_deg = 0\nplan.extents = 1mm, 2mm",
            "coil.w.turns = 3",
            "plan.name = file",
        ] {
            let err = ExperimentConfig::parse(bad).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{bad}: {err}");
        }
    }

    #[test]
    fn file_plan_segments() {
        let cfg = ExperimentConfig::parse(
            "plan.name = file\nplan.yaws_deg = 0, 90, 270\nplan.extents = 10mm, 0.5s, 10mm\ncalibration.status = fitted",
        )
        .unwrap();
        let plan = cfg.trajectory_plan("file").unwrap();
        assert_eq!(plan.schedule.yaws(), vec![0.0, 90.0, -90.0]);
        assert_eq!(plan.schedule.segments[1].extent, Extent::Duration(0.5));
        assert_eq!(plan.target.len(), 4);
    }

    #[test]
    fn hash_ignores_output_dir_only() {
        let a = ExperimentConfig::default();
        let b = ExperimentConfig {
            output_dir: "elsewhere".into(),
            ..a.clone()
        };
        let c = ExperimentConfig {
            seed: 9,
            ..a.clone()
        };
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn uncalibrated_configs_are_refused() {
        assert!(matches!(
            ExperimentConfig::default().require_calibrated(),
            Err(Error::NotCalibrated)
        ));
    }
}
