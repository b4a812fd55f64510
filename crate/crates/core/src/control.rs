//! Open-loop yaw schedules, steering decomposition, the built-in trajectory plans and
//! deviation metrics against a target polyline.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::DriveSignal;
use crate::locomotion::{
    wrap_angle, BodyState, Swimmer, TrajectoryRecord, TrajectorySample, SETTLING_BAND_DEG,
};

pub const DEFAULT_LEG_MM: f64 = 20.0;
pub const DEFAULT_DWELL_S: f64 = 0.45;
pub const PLAN_FIELD_MT: f64 = 4.0;
pub const PLAN_FREQUENCY_HZ: f64 = 11.0;
pub const PLAN_PITCH_DEG: f64 = 45.0;

/// Wraps degrees into (-180, 180].
pub fn wrap_deg(a: f64) -> f64 {
    let w = a.rem_euclid(360.0);
    if w > 180.0 {
        w - 360.0
    } else {
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Extent {
    /// Hold for a duration (s).
    Duration(f64),
    /// Hold until this much path length is covered (mm).
    Distance(f64),
}

impl Extent {
    pub fn value(&self) -> f64 {
        match *self {
            Extent::Duration(v) | Extent::Distance(v) => v,
        }
    }

    /// Parses `20mm` or `0.45s`.
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim();
        let (num, ctor): (&str, fn(f64) -> Extent) = if let Some(n) = t.strip_suffix("mm") {
            (n, Extent::Distance)
        } else if let Some(n) = t.strip_suffix('s') {
            (n, Extent::Duration)
        } else {
            return Err(Error::config(format!(
                "segment extent {t:?} needs a `mm` or `s` suffix"
            )));
        };
        let v: f64 = num
            .trim()
            .parse()
            .map_err(|_| Error::config(format!("segment extent {t:?} is not a number")))?;
        Ok(ctor(v))
    }
}

impl fmt::Display for Extent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Extent::Duration(v) => write!(f, "{v}s"),
            Extent::Distance(v) => write!(f, "{v}mm"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YawSegment {
    pub extent: Extent,
    /// Commanded yaw (degrees), in (-180, 180].
    pub yaw_deg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScheduleMode {
    /// Legs are path lengths.
    Distance,
    /// Legs are durations.
    Time,
}

impl ScheduleMode {
    pub fn leg(self, value: f64) -> Extent {
        match self {
            ScheduleMode::Distance => Extent::Distance(value),
            ScheduleMode::Time => Extent::Duration(value),
        }
    }
}

/// Ordered yaw commands. `mode` governs how legs are measured; decomposition dwells are always timed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YawSchedule {
    pub mode: ScheduleMode,
    pub segments: Vec<YawSegment>,
}

impl YawSchedule {
    pub fn new(mode: ScheduleMode) -> Self {
        Self {
            mode,
            segments: Vec::new(),
        }
    }

    /// Appends a leg at absolute yaw `yaw_deg`.
    pub fn leg(mut self, yaw_deg: f64, length: f64) -> Self {
        let extent = self.mode.leg(length);
        self.segments.push(YawSegment {
            extent,
            yaw_deg: wrap_deg(yaw_deg),
        });
        self
    }

    /// Appends a turn from the last yaw realized as `steps`, ending in a leg of `length`.
    pub fn turn(mut self, steps: &[TurnStep], length: f64) -> Result<Self> {
        let mut yaw = self
            .segments
            .last()
            .map(|s| s.yaw_deg)
            .ok_or_else(|| Error::input("a turn needs a preceding segment"))?;
        let (last, dwells) = steps
            .split_last()
            .ok_or_else(|| Error::input("empty turn"))?;
        for s in dwells {
            yaw = wrap_deg(yaw + s.increment_deg);
            self.segments.push(YawSegment {
                extent: Extent::Duration(s.dwell_s),
                yaw_deg: yaw,
            });
        }
        Ok(self.leg(yaw + last.increment_deg, length))
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::input("yaw schedule is empty"));
        }
        for (i, s) in self.segments.iter().enumerate() {
            if !(s.extent.value() > 0.0 && s.extent.value().is_finite()) {
                return Err(Error::input(format!("segment {i}: extent must be > 0")));
            }
            if !(s.yaw_deg > -180.0 && s.yaw_deg <= 180.0) {
                return Err(Error::input(format!(
                    "segment {i}: yaw {} outside (-180, 180]",
                    s.yaw_deg
                )));
            }
        }
        Ok(())
    }

    pub fn yaws(&self) -> Vec<f64> {
        self.segments.iter().map(|s| s.yaw_deg).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TurnStep {
    pub increment_deg: f64,
    pub dwell_s: f64,
}

/// Splits a turn of `delta_deg` into `steps` equal increments, each held for `dwell_s`.
pub fn decompose_turn(delta_deg: f64, steps: usize, dwell_s: f64) -> Result<Vec<TurnStep>> {
    if steps == 0 {
        return Err(Error::input("turn decomposition needs at least one step"));
    }
    if !(dwell_s > 0.0) {
        return Err(Error::input(format!("dwell must be > 0, got {dwell_s}")));
    }
    let inc = delta_deg / steps as f64;
    let mut out = vec![
        TurnStep {
            increment_deg: inc,
            dwell_s
        };
        steps
    ];
    // The last increment absorbs rounding so the total equals delta exactly.
    let head: f64 = out[..steps - 1].iter().map(|s| s.increment_deg).sum();
    out[steps - 1].increment_deg = delta_deg - head;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPlan {
    pub name: String,
    pub schedule: YawSchedule,
    /// Drive template; its yaw is overridden by the schedule.
    pub drive: DriveSignal,
    /// Target vertices (mm), one more than the segment count.
    pub target: Vec<[f64; 2]>,
}

impl TrajectoryPlan {
    /// Builds the target polyline; timed segments advance `cruise_mm_s * duration`.
    pub fn new(
        name: impl Into<String>,
        schedule: YawSchedule,
        drive: DriveSignal,
        cruise_mm_s: f64,
    ) -> Result<Self> {
        schedule.validate()?;
        drive.validate()?;
        let mut target = vec![[0.0, 0.0]];
        for seg in &schedule.segments {
            let len = match seg.extent {
                Extent::Distance(d) => d,
                Extent::Duration(t) => cruise_mm_s * t,
            };
            let [x, y] = *target.last().expect("seeded");
            let (s, c) = seg.yaw_deg.to_radians().sin_cos();
            target.push([x + len * c, y + len * s]);
        }
        Ok(Self {
            name: name.into(),
            schedule,
            drive,
            target,
        })
    }
}

pub fn plan_drive() -> DriveSignal {
    DriveSignal::with_pitch(PLAN_FIELD_MT, PLAN_PITCH_DEG, 0.0, PLAN_FREQUENCY_HZ)
}

/// Yaw schedules of the three named experiments.
pub fn builtin_schedule(name: &str, leg_mm: f64, dwell_s: f64) -> Result<YawSchedule> {
    let s = YawSchedule::new(ScheduleMode::Distance);
    match name {
        "Z" => Ok(s.leg(0.0, leg_mm).leg(-45.0, leg_mm).leg(0.0, leg_mm)),
        "square" => {
            let quarter = decompose_turn(-90.0, 2, dwell_s)?;
            s.leg(0.0, leg_mm)
                .turn(&quarter, leg_mm)?
                .turn(&quarter, leg_mm)?
                .turn(&quarter, leg_mm)
        }
        "nabla" => Ok(s.leg(-45.0, leg_mm).leg(75.0, leg_mm).leg(-165.0, leg_mm)),
        other => Err(Error::config(format!(
            "unknown plan {other:?}; expected Z, square, nabla or file"
        ))),
    }
}

pub fn builtin_plan(name: &str, cruise_mm_s: f64) -> Result<TrajectoryPlan> {
    let schedule = builtin_schedule(name, DEFAULT_LEG_MM, DEFAULT_DWELL_S)?;
    TrajectoryPlan::new(name, schedule, plan_drive(), cruise_mm_s)
}

/// Segments are given up this many multiples of their nominal time before failing.
const SEGMENT_TIME_LIMIT: f64 = 50.0;

/// Integrates a plan from steady straight swimming along the first yaw.
pub fn simulate_plan(
    swimmer: &Swimmer,
    plan: &TrajectoryPlan,
    dt: f64,
) -> Result<TrajectoryRecord> {
    if !(dt > 0.0) {
        return Err(Error::input(format!("dt must be > 0, got {dt}")));
    }
    plan.schedule.validate()?;
    let cruise = swimmer.steady_speed(plan.drive.b_z_mt, plan.drive.frequency_hz)?;
    let first = plan.schedule.segments[0].yaw_deg.to_radians();
    let mut state = BodyState {
        psi: wrap_angle(first),
        vx: cruise * first.cos(),
        vy: cruise * first.sin(),
        ..Default::default()
    };
    let mut n: u64 = 0;
    let mut record = TrajectoryRecord::default();
    record.samples.push(TrajectorySample {
        t: 0.0,
        state,
        gamma_cmd_deg: plan.schedule.segments[0].yaw_deg,
    });
    for (i, seg) in plan.schedule.segments.iter().enumerate() {
        let drive = DriveSignal {
            yaw_deg: seg.yaw_deg,
            ..plan.drive
        };
        let mut advance = |state: &mut BodyState, n: &mut u64| -> Result<f64> {
            let next = swimmer.step(state, &drive, dt)?;
            let ds = (next.x - state.x).hypot(next.y - state.y);
            *state = next;
            *n += 1;
            record.samples.push(TrajectorySample {
                t: *n as f64 * dt,
                state: next,
                gamma_cmd_deg: seg.yaw_deg,
            });
            Ok(ds)
        };
        match seg.extent {
            Extent::Duration(d) => {
                for _ in 0..(d / dt).round() as u64 {
                    advance(&mut state, &mut n)?;
                }
            }
            Extent::Distance(d) => {
                if !(cruise > 0.0) {
                    return Err(Error::Analysis(format!(
                        "segment {i}: swimmer does not move at this drive"
                    )));
                }
                let limit = (SEGMENT_TIME_LIMIT * d / (cruise * dt)).ceil() as u64;
                let mut covered = 0.0;
                let mut taken = 0;
                while covered < d {
                    if taken == limit {
                        return Err(Error::Analysis(format!(
                            "segment {i}: {d} mm not covered in time"
                        )));
                    }
                    covered += advance(&mut state, &mut n)?;
                    taken += 1;
                }
            }
        }
    }
    Ok(record)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviationMetrics {
    /// Maximum point-to-polyline distance (mm).
    pub max_dev: f64,
    /// Mean point-to-polyline distance (mm).
    pub mean_dev: f64,
    /// Maximum distance from the ray of the active command, anchored where it took effect (mm).
    pub steering_max_dev: f64,
    pub steering_mean_dev: f64,
    /// Largest heading excess beyond a commanded yaw, over all turns (degrees).
    pub peak_overshoot_deg: f64,
    /// Largest per-turn settling time (s); turns that never settle count their full epoch.
    pub settling_time_s: f64,
    pub turns: usize,
}

fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p[0] - a[0] - t * dx).hypot(p[1] - a[1] - t * dy)
}

pub fn point_polyline_distance(p: [f64; 2], line: &[[f64; 2]]) -> f64 {
    match line {
        [] => f64::INFINITY,
        [only] => (p[0] - only[0]).hypot(p[1] - only[1]),
        _ => line
            .windows(2)
            .map(|w| point_segment_distance(p, w[0], w[1]))
            .fold(f64::INFINITY, f64::min),
    }
}

fn ray_distance(p: [f64; 2], anchor: [f64; 2], yaw_deg: f64) -> f64 {
    let (s, c) = yaw_deg.to_radians().sin_cos();
    let (rx, ry) = (p[0] - anchor[0], p[1] - anchor[1]);
    let along = rx * c + ry * s;
    if along <= 0.0 {
        rx.hypot(ry)
    } else {
        (-rx * s + ry * c).abs()
    }
}

/// Index ranges of constant commanded yaw.
fn epochs(samples: &[TrajectorySample]) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=samples.len() {
        if i == samples.len() || samples[i].gamma_cmd_deg != samples[start].gamma_cmd_deg {
            out.push(start..i);
            start = i;
        }
    }
    out
}

pub fn deviation_metrics(traj: &TrajectoryRecord, target: &[[f64; 2]]) -> Result<DeviationMetrics> {
    let samples = &traj.samples;
    if samples.len() < 2 {
        return Err(Error::Analysis(
            "trajectory needs at least two samples".into(),
        ));
    }
    if target.is_empty() {
        return Err(Error::Analysis("target polyline is empty".into()));
    }
    let dists: Vec<f64> = samples
        .iter()
        .map(|s| point_polyline_distance([s.state.x, s.state.y], target))
        .collect();
    let max_dev = dists.iter().copied().fold(0.0, f64::max);
    let mean_dev = dists.iter().sum::<f64>() / dists.len() as f64;

    let epochs = epochs(samples);
    let mut steering = Vec::with_capacity(samples.len());
    let mut peak_overshoot_deg: f64 = 0.0;
    let mut settling_time_s: f64 = 0.0;
    let band = SETTLING_BAND_DEG.to_radians();
    for (e, range) in epochs.iter().enumerate() {
        let anchor = &samples[range.start.saturating_sub(1)];
        let yaw = samples[range.start].gamma_cmd_deg;
        for s in &samples[range.clone()] {
            steering.push(ray_distance(
                [s.state.x, s.state.y],
                [anchor.state.x, anchor.state.y],
                yaw,
            ));
        }
        if e == 0 {
            continue;
        }
        let prev = samples[range.start - 1].gamma_cmd_deg;
        let turn = wrap_deg(yaw - prev);
        let target_rad = yaw.to_radians();
        let excess = samples[range.clone()]
            .iter()
            .map(|s| turn.signum() * wrap_angle(s.state.psi - target_rad))
            .fold(0.0, f64::max);
        peak_overshoot_deg = peak_overshoot_deg.max(excess.to_degrees());
        let t_cmd = anchor.t;
        let last_out = samples[range.clone()]
            .iter()
            .rposition(|s| wrap_angle(s.state.psi - target_rad).abs() > band);
        let settle = match last_out {
            None => 0.0,
            Some(i) => samples[(range.start + i + 1).min(range.end - 1)].t - t_cmd,
        };
        settling_time_s = settling_time_s.max(settle);
    }
    let steering_max_dev = steering.iter().copied().fold(0.0, f64::max);
    let steering_mean_dev = steering.iter().sum::<f64>() / steering.len() as f64;
    Ok(DeviationMetrics {
        max_dev,
        mean_dev,
        steering_max_dev,
        steering_mean_dev,
        peak_overshoot_deg,
        settling_time_s,
        turns: epochs.len() - 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actuation::{FinOscillator, MagnetizedFin};
    use crate::locomotion::HydroParams;

    fn swimmer() -> Swimmer {
        Swimmer {
            fin: MagnetizedFin::new(2.3328e-9, 6.0e4),
            osc: FinOscillator::default(),
            hydro: HydroParams::default(),
        }
    }

    #[test]
    fn equal_split_and_identity() {
        let d = decompose_turn(90.0, 2, 0.3).unwrap();
        assert_eq!(
            d.iter().map(|s| s.increment_deg).collect::<Vec<_>>(),
            vec![45.0, 45.0]
        );
        let single = decompose_turn(-60.0, 1, 0.3).unwrap();
        assert_eq!(single.len(), 1);
        assert_eq!(single[0].increment_deg, -60.0);
        assert!(decompose_turn(90.0, 0, 0.3).is_err());
        assert!(decompose_turn(90.0, 2, 0.0).is_err());
    }

    #[test]
    fn square_yaws_match_listed_sequence() {
        let yaws = builtin_schedule("square", 20.0, 0.45).unwrap().yaws();
        let listed = [0.0, -45.0, -90.0, -135.0, -180.0, 135.0, 90.0];
        assert_eq!(yaws.len(), listed.len());
        for (a, b) in yaws.iter().zip(listed) {
            assert_eq!(wrap_deg(a - b), 0.0, "{yaws:?}");
        }
    }

    #[test]
    fn builtin_plans() {
        let z = builtin_plan("Z", 5.0).unwrap();
        assert_eq!(z.schedule.yaws(), vec![0.0, -45.0, 0.0]);
        let n = builtin_plan("nabla", 5.0).unwrap();
        assert_eq!(n.schedule.yaws(), vec![-45.0, 75.0, -165.0]);
        for name in ["Z", "square", "nabla"] {
            let p = builtin_plan(name, 5.0).unwrap();
            assert_eq!(p.drive.b_xy_mt, 4.0);
            assert_eq!(p.drive.frequency_hz, 11.0);
            assert!((p.drive.pitch_deg().unwrap() - 45.0).abs() < 1e-9);
            assert_eq!(p.target.len(), p.schedule.segments.len() + 1);
        }
        assert!(builtin_plan("circle", 5.0).is_err());
    }

    #[test]
    fn extents_round_trip() {
        for e in [Extent::Distance(20.0), Extent::Duration(0.45)] {
            assert_eq!(Extent::parse(&e.to_string()).unwrap(), e);
        }
        assert!(Extent::parse("20").is_err());
        assert!(Extent::parse("xmm").is_err());
    }

    fn record(points: &[(f64, f64, f64, f64)]) -> TrajectoryRecord {
        TrajectoryRecord {
            samples: points
                .iter()
                .enumerate()
                .map(|(i, &(x, y, psi, g))| TrajectorySample {
                    t: i as f64 * 0.1,
                    state: BodyState {
                        x,
                        y,
                        psi,
                        ..Default::default()
                    },
                    gamma_cmd_deg: g,
                })
                .collect(),
        }
    }

    #[test]
    fn on_polyline_has_zero_deviation() {
        let target = [[0.0, 0.0], [10.0, 0.0], [10.0, 10.0]];
        let r = record(&[
            (0.0, 0.0, 0.0, 0.0),
            (5.0, 0.0, 0.0, 0.0),
            (10.0, 0.0, 0.0, 90.0),
            (10.0, 7.0, 0.0, 90.0),
        ]);
        let m = deviation_metrics(&r, &target).unwrap();
        assert_eq!(m.max_dev, 0.0);
        assert_eq!(m.mean_dev, 0.0);
        assert_eq!(m.turns, 1);
    }

    #[test]
    fn straight_matched_run_has_no_overshoot() {
        let s = swimmer();
        let plan = TrajectoryPlan::new(
            "line",
            YawSchedule::new(ScheduleMode::Distance).leg(30.0, 15.0),
            plan_drive(),
            s.steady_speed(4.0, 11.0).unwrap(),
        )
        .unwrap();
        let rec = simulate_plan(&s, &plan, 1e-3).unwrap();
        let m = deviation_metrics(&rec, &plan.target).unwrap();
        assert_eq!(m.peak_overshoot_deg, 0.0);
        assert!(m.steering_max_dev < 1e-9);
        // The final sample may pass the end vertex by less than one step of travel.
        assert!(m.max_dev < 6e-3, "{}", m.max_dev);
        assert_eq!(m.turns, 0);
    }

    #[test]
    fn degenerate_trajectory_is_rejected() {
        let r = record(&[(0.0, 0.0, 0.0, 0.0)]);
        assert!(deviation_metrics(&r, &[[0.0, 0.0], [1.0, 0.0]]).is_err());
    }

    #[test]
    fn distance_legs_cover_their_length() {
        let s = swimmer();
        let plan = builtin_plan("Z", s.steady_speed(4.0, 11.0).unwrap()).unwrap();
        let rec = simulate_plan(&s, &plan, 1e-3).unwrap();
        let path: f64 = rec
            .samples
            .windows(2)
            .map(|w| (w[1].state.x - w[0].state.x).hypot(w[1].state.y - w[0].state.y))
            .sum();
        assert!((path - 60.0).abs() < 0.05, "{path}");
        assert_eq!(rec.yaw_epochs(), 3);
    }

    #[test]
    fn decomposed_turn_deviates_less() {
        let s = swimmer();
        let cruise = s.steady_speed(4.0, 11.0).unwrap();
        let single = YawSchedule::new(ScheduleMode::Distance)
            .leg(0.0, 20.0)
            .turn(&decompose_turn(60.0, 1, DEFAULT_DWELL_S).unwrap(), 20.0)
            .unwrap();
        let split = YawSchedule::new(ScheduleMode::Distance)
            .leg(0.0, 20.0)
            .turn(&decompose_turn(60.0, 2, DEFAULT_DWELL_S).unwrap(), 20.0)
            .unwrap();
        let dev = |sched: YawSchedule| {
            let plan = TrajectoryPlan::new("t", sched, plan_drive(), cruise).unwrap();
            let rec = simulate_plan(&s, &plan, 1e-3).unwrap();
            deviation_metrics(&rec, &plan.target).unwrap()
        };
        let (a, b) = (dev(single), dev(split));
        assert!(b.steering_max_dev < a.steering_max_dev, "{b:?} vs {a:?}");
        assert!(b.peak_overshoot_deg < a.peak_overshoot_deg);
    }
}
