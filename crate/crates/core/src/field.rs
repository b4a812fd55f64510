//! Tri-axial Helmholtz coil model, oscillating drive field, and uniformity analysis.
//!
//! Each Helmholtz pair is two ideal filament loops of the table's effective
//! radius `R`, spaced `R` apart along the pair's axis. The loop field is a
//! direct Biot–Savart sum over straight segments. Segments sit at half-step
//! angles, so for a segment count divisible by four the discretized loop keeps
//! the mirror symmetries of the continuous one.

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Vacuum permeability (H/m).
pub const MU_0: f64 = 4.0e-7 * std::f64::consts::PI;

pub const DEFAULT_SEGMENTS: usize = 720;

/// Copper wire diameter of the coils is 1.2 mm.
pub const DEFAULT_WIRE_RADIUS_M: f64 = 0.6e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn unit(self) -> Vector3<f64> {
        let mut v = Vector3::zeros();
        v[self.index()] = 1.0;
        v
    }

    pub fn name(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }

    /// Right-handed frame `(e1, e2, e3)` with `e3` along this axis.
    fn frame(self) -> [Vector3<f64>; 3] {
        let (x, y, z) = (Vector3::x(), Vector3::y(), Vector3::z());
        match self {
            Axis::X => [y, z, x],
            Axis::Y => [z, x, y],
            Axis::Z => [x, y, z],
        }
    }

    fn to_local(self, p: &Vector3<f64>) -> Vector3<f64> {
        let [e1, e2, e3] = self.frame();
        Vector3::new(p.dot(&e1), p.dot(&e2), p.dot(&e3))
    }

    fn to_global(self, v: &Vector3<f64>) -> Vector3<f64> {
        let [e1, e2, e3] = self.frame();
        e1 * v.x + e2 * v.y + e3 * v.z
    }
}

/// Discretization settings for the Biot–Savart loop sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoopKernel {
    pub segments: usize,
    /// Points closer than this to the filament are rejected.
    pub wire_radius_m: f64,
}

impl Default for LoopKernel {
    fn default() -> Self {
        Self {
            segments: DEFAULT_SEGMENTS,
            wire_radius_m: DEFAULT_WIRE_RADIUS_M,
        }
    }
}

impl LoopKernel {
    pub fn with_segments(segments: usize) -> Self {
        Self {
            segments,
            ..Self::default()
        }
    }

    /// Field (T) of an N-turn loop of radius `radius` (m) centred at `(0, 0, center_z)`
    /// with its axis along +z, carrying `current` (A) counter-clockwise about +z.
    pub fn loop_field(
        &self,
        radius: f64,
        center_z: f64,
        current: f64,
        turns: f64,
        point: &Vector3<f64>,
    ) -> Result<Vector3<f64>> {
        if !(radius > 0.0) {
            return Err(Error::input(format!(
                "loop radius must be > 0, got {radius}"
            )));
        }
        if self.segments < 3 {
            return Err(Error::input("loop needs at least 3 segments"));
        }
        let rel_z = point.z - center_z;
        let rho = point.x.hypot(point.y);
        let clearance = (rho - radius).hypot(rel_z);
        if clearance < self.wire_radius_m {
            return Err(Error::Singularity {
                clearance_mm: clearance * 1e3,
            });
        }
        if current == 0.0 {
            return Ok(Vector3::zeros());
        }

        let n = self.segments;
        let dphi = std::f64::consts::TAU / n as f64;
        let mut b = Vector3::zeros();
        for k in 0..n {
            let phi = (k as f64 + 0.5) * dphi;
            let (s, c) = phi.sin_cos();
            let src = Vector3::new(radius * c, radius * s, center_z);
            let dl = Vector3::new(-radius * s * dphi, radius * c * dphi, 0.0);
            let r = point - src;
            let d2 = r.norm_squared();
            b += dl.cross(&r) / (d2 * d2.sqrt());
        }
        Ok(b * (MU_0 / (4.0 * std::f64::consts::PI) * current * turns))
    }
}

/// Field of an N-turn circular loop in the z = 0 plane, default discretization.
pub fn loop_field(
    loop_radius: f64,
    current: f64,
    turns: f64,
    point: &Vector3<f64>,
) -> Result<Vector3<f64>> {
    LoopKernel::default().loop_field(loop_radius, 0.0, current, turns, point)
}

/// Analytic on-axis field magnitude (T) of a single loop at axial distance `d`.
pub fn loop_on_axis_analytic(radius: f64, current: f64, turns: f64, d: f64) -> f64 {
    MU_0 * turns * current * radius * radius / (2.0 * (radius * radius + d * d).powf(1.5))
}

/// One Helmholtz pair of the drive system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoilAxis {
    pub axis: Axis,
    pub turns: u32,
    pub resistance_ohm: f64,
    pub effective_radius_mm: f64,
    pub inner_diameter_mm: f64,
    pub outer_diameter_mm: f64,
}

impl CoilAxis {
    pub fn default_for(axis: Axis) -> Self {
        let (turns, resistance_ohm, outer, inner, radius) = match axis {
            Axis::X => (900, 14.38, 418.0, 324.0, 190.0),
            Axis::Y => (648, 7.83, 310.0, 230.0, 140.0),
            Axis::Z => (480, 4.23, 224.0, 140.0, 100.0),
        };
        Self {
            axis,
            turns,
            resistance_ohm,
            effective_radius_mm: radius,
            inner_diameter_mm: inner,
            outer_diameter_mm: outer,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let name = self.axis.name();
        if self.turns == 0 {
            return Err(Error::input(format!("coil.{name}: turns must be > 0")));
        }
        if !(self.effective_radius_mm > 0.0) || !(self.resistance_ohm > 0.0) {
            return Err(Error::input(format!(
                "coil.{name}: radius and resistance must be > 0"
            )));
        }
        if !(self.inner_diameter_mm < self.outer_diameter_mm) {
            return Err(Error::input(format!(
                "coil.{name}: inner diameter {} must be below outer diameter {}",
                self.inner_diameter_mm, self.outer_diameter_mm
            )));
        }
        Ok(())
    }

    pub fn radius_m(&self) -> f64 {
        self.effective_radius_mm * 1e-3
    }

    /// Closed-form centre field per ampere (T/A): mu0 (4/5)^{3/2} N / R.
    pub fn center_field_per_amp_analytic(&self) -> f64 {
        MU_0 * 0.8f64.powf(1.5) * f64::from(self.turns) / self.radius_m()
    }

    /// Field (T) at `point` (m, global frame) for `current` (A) in both loops.
    pub fn pair_field_with(
        &self,
        kernel: &LoopKernel,
        current: f64,
        point: &Vector3<f64>,
    ) -> Result<Vector3<f64>> {
        let r = self.radius_m();
        let local = self.axis.to_local(point);
        let turns = f64::from(self.turns);
        let upper = kernel.loop_field(r, 0.5 * r, current, turns, &local)?;
        let lower = kernel.loop_field(r, -0.5 * r, current, turns, &local)?;
        Ok(self.axis.to_global(&(upper + lower)))
    }
}

/// Helmholtz pair field with the default loop discretization.
pub fn pair_field(axis: &CoilAxis, current: f64, point: &Vector3<f64>) -> Result<Vector3<f64>> {
    axis.pair_field_with(&LoopKernel::default(), current, point)
}

/// Current (A) giving a centre field of `b_target_mt` along the pair axis. The sign follows the target.
pub fn current_for_field(axis: &CoilAxis, b_target_mt: f64) -> Result<f64> {
    current_for_field_with(&LoopKernel::default(), axis, b_target_mt)
}

pub fn current_for_field_with(
    kernel: &LoopKernel,
    axis: &CoilAxis,
    b_target_mt: f64,
) -> Result<f64> {
    if !b_target_mt.is_finite() {
        return Err(Error::input("target field must be finite"));
    }
    if b_target_mt == 0.0 {
        return Ok(0.0);
    }
    let per_amp = axis
        .pair_field_with(kernel, 1.0, &Vector3::zeros())?
        .dot(&axis.axis.unit());
    Ok(b_target_mt * 1e-3 / per_amp)
}

/// Three orthogonal Helmholtz pairs, X outermost and Z innermost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriaxialCoil {
    pub axes: [CoilAxis; 3],
    pub kernel: LoopKernel,
}

impl Default for TriaxialCoil {
    fn default() -> Self {
        Self {
            axes: Axis::ALL.map(CoilAxis::default_for),
            kernel: LoopKernel::default(),
        }
    }
}

impl TriaxialCoil {
    pub fn axis(&self, axis: Axis) -> &CoilAxis {
        &self.axes[axis.index()]
    }

    pub fn validate(&self) -> Result<()> {
        for (i, a) in self.axes.iter().enumerate() {
            if a.axis.index() != i {
                return Err(Error::input("coil axes must be listed as X, Y, Z"));
            }
            a.validate()?;
        }
        let [x, y, z] = &self.axes;
        if !(x.outer_diameter_mm > y.outer_diameter_mm && y.outer_diameter_mm > z.outer_diameter_mm)
        {
            return Err(Error::input(
                "coil nesting requires outer diameters X > Y > Z",
            ));
        }
        if !(x.effective_radius_mm > y.effective_radius_mm
            && y.effective_radius_mm > z.effective_radius_mm)
        {
            return Err(Error::input(
                "coil nesting requires effective radii X > Y > Z",
            ));
        }
        if self.kernel.segments < 3 {
            return Err(Error::input("coil.segments must be at least 3"));
        }
        Ok(())
    }

    /// Superposed field (T) for per-axis currents (A) at `point` (m).
    pub fn field(&self, currents: [f64; 3], point: &Vector3<f64>) -> Result<Vector3<f64>> {
        let mut b = Vector3::zeros();
        for (axis, &current) in self.axes.iter().zip(&currents) {
            b += axis.pair_field_with(&self.kernel, current, point)?;
        }
        Ok(b)
    }

    /// Per-axis currents producing `b_mt` (mT vector) at the centre.
    pub fn currents_for(&self, b_mt: &Vector3<f64>) -> Result<[f64; 3]> {
        let mut out = [0.0; 3];
        for (slot, axis) in out.iter_mut().zip(&self.axes) {
            *slot = current_for_field_with(&self.kernel, axis, b_mt[axis.axis.index()])?;
        }
        Ok(out)
    }
}

/// Oscillating harmonic drive: a sinusoidal vertical field on top of a static in-plane field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveSignal {
    /// In-plane static field magnitude (mT).
    pub b_xy_mt: f64,
    /// Direction of the in-plane field from +X (degrees).
    pub yaw_deg: f64,
    /// Amplitude of the vertical sinusoid (mT).
    pub b_z_mt: f64,
    pub frequency_hz: f64,
    pub phase_rad: f64,
}

impl DriveSignal {
    /// Signal with total in-plane strength `b_mt` and vertical amplitude set by the peak pitch.
    pub fn with_pitch(b_mt: f64, pitch_deg: f64, yaw_deg: f64, frequency_hz: f64) -> Self {
        Self {
            b_xy_mt: b_mt,
            yaw_deg,
            b_z_mt: b_mt * pitch_deg.to_radians().tan(),
            frequency_hz,
            phase_rad: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !(ok(self.b_xy_mt) && ok(self.b_z_mt) && ok(self.frequency_hz)) {
            return Err(Error::input(
                "drive signal requires finite B_xy >= 0, B_z >= 0, f >= 0",
            ));
        }
        if !(self.yaw_deg.is_finite() && self.phase_rad.is_finite()) {
            return Err(Error::input("drive yaw and phase must be finite"));
        }
        Ok(())
    }

    /// Peak elevation of the field above the OXY plane (degrees).
    pub fn pitch_deg(&self) -> Option<f64> {
        (self.b_xy_mt > 0.0).then(|| self.b_z_mt.atan2(self.b_xy_mt).to_degrees())
    }
}

/// Drive field (mT) at time `t` (s).
pub fn oscillating_field(signal: &DriveSignal, t: f64) -> Vector3<f64> {
    let yaw = signal.yaw_deg.to_radians();
    let bz =
        signal.b_z_mt * (std::f64::consts::TAU * signal.frequency_hz * t + signal.phase_rad).sin();
    Vector3::new(signal.b_xy_mt * yaw.cos(), signal.b_xy_mt * yaw.sin(), bz)
}

/// Origin-centred box dimensions in millimetres (extreme grid point to extreme grid point).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxDims {
    pub dx_mm: f64,
    pub dy_mm: f64,
    pub dz_mm: f64,
}

impl BoxDims {
    pub fn as_array(&self) -> [f64; 3] {
        [self.dx_mm, self.dy_mm, self.dz_mm]
    }

    pub fn is_empty(&self) -> bool {
        self.dx_mm == 0.0 && self.dy_mm == 0.0 && self.dz_mm == 0.0
    }

    /// Every dimension strictly larger than `other`'s.
    pub fn strictly_contains(&self, other: &BoxDims) -> bool {
        self.as_array()
            .iter()
            .zip(other.as_array())
            .all(|(a, b)| *a > b)
    }
}

/// Relative field deviations sampled on one octant of a centred grid.
///
/// Each energized axis is scanned on its own; a grid value is the worst
/// relative deviation `|B(p) - B(0)| / |B(0)|` over those single-axis runs.
#[derive(Debug, Clone)]
pub struct DeviationGrid {
    step_mm: f64,
    dims: [usize; 3],
    values: Vec<f64>,
}

struct Energized<'a> {
    axis: &'a CoilAxis,
    current: f64,
    center: Vector3<f64>,
    inv_center_norm: f64,
}

fn energized<'a>(coil: &'a TriaxialCoil, currents: [f64; 3]) -> Result<Vec<Energized<'a>>> {
    let mut out = Vec::new();
    for (axis, &current) in coil.axes.iter().zip(&currents) {
        if current == 0.0 {
            continue;
        }
        let center = axis.pair_field_with(&coil.kernel, current, &Vector3::zeros())?;
        out.push(Energized {
            axis,
            current,
            center,
            inv_center_norm: 1.0 / center.norm(),
        });
    }
    if out.is_empty() {
        return Err(Error::input(
            "homogeneity scan needs at least one energized axis",
        ));
    }
    Ok(out)
}

fn worst_deviation(coil: &TriaxialCoil, runs: &[Energized<'_>], p: &Vector3<f64>) -> Result<f64> {
    let mut worst = 0.0f64;
    for run in runs {
        let b = run.axis.pair_field_with(&coil.kernel, run.current, p)?;
        worst = worst.max((b - run.center).norm() * run.inv_center_norm);
    }
    Ok(worst)
}

/// Relative deviation at one point (mm), maximised over single-axis runs.
pub fn relative_deviation(
    coil: &TriaxialCoil,
    currents: [f64; 3],
    point_mm: [f64; 3],
) -> Result<f64> {
    let runs = energized(coil, currents)?;
    let p = Vector3::from(point_mm) * 1e-3;
    worst_deviation(coil, &runs, &p)
}

impl DeviationGrid {
    /// Samples the octant up to where each coordinate axis line first exceeds `max_tolerance`.
    pub fn scan(
        coil: &TriaxialCoil,
        currents: [f64; 3],
        max_tolerance: f64,
        grid_step_mm: f64,
    ) -> Result<Self> {
        if !(max_tolerance > 0.0 && max_tolerance < 1.0) {
            return Err(Error::input(format!(
                "tolerance must be in (0, 1), got {max_tolerance}"
            )));
        }
        if !(grid_step_mm > 0.0 && grid_step_mm.is_finite()) {
            return Err(Error::input(format!(
                "grid step must be > 0, got {grid_step_mm}"
            )));
        }
        coil.validate()?;
        let runs = energized(coil, currents)?;
        let step = grid_step_mm * 1e-3;
        let reach = coil.axes.iter().map(|a| a.radius_m()).fold(0.0, f64::max);
        let max_index = (reach / step).floor() as usize;

        let mut dims = [1usize; 3];
        for (d, slot) in dims.iter_mut().enumerate() {
            let mut last = 0;
            for i in 1..=max_index {
                let mut p = Vector3::zeros();
                p[d] = i as f64 * step;
                if worst_deviation(coil, &runs, &p)? > max_tolerance {
                    break;
                }
                last = i;
            }
            *slot = last + 1;
        }

        let [nx, ny, nz] = dims;
        let values = (0..nx * ny * nz)
            .into_par_iter()
            .map(|flat| {
                let (i, j, k) = (flat / (ny * nz), (flat / nz) % ny, flat % nz);
                let p = Vector3::new(i as f64, j as f64, k as f64) * step;
                worst_deviation(coil, &runs, &p)
            })
            .collect::<Result<Vec<_>>>()?;

        Ok(Self {
            step_mm: grid_step_mm,
            dims,
            values,
        })
    }

    pub fn step_mm(&self) -> f64 {
        self.step_mm
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        let [_, ny, nz] = self.dims;
        self.values[(i * ny + j) * nz + k]
    }

    /// `ok[i][j][k]` true when every grid point of the box with half-indices (i, j, k) passes.
    fn prefix_valid(&self, tolerance: f64) -> Vec<bool> {
        let [nx, ny, nz] = self.dims;
        let idx = |i: usize, j: usize, k: usize| (i * ny + j) * nz + k;
        let mut ok: Vec<bool> = self.values.iter().map(|&v| v <= tolerance).collect();
        for i in 0..nx {
            for j in 0..ny {
                for k in 0..nz {
                    let mut v = ok[idx(i, j, k)];
                    if i > 0 {
                        v &= ok[idx(i - 1, j, k)];
                    }
                    if j > 0 {
                        v &= ok[idx(i, j - 1, k)];
                    }
                    if k > 0 {
                        v &= ok[idx(i, j, k - 1)];
                    }
                    ok[idx(i, j, k)] = v;
                }
            }
        }
        ok
    }

    /// Largest origin-centred box (by grid-point count) whose points all pass `tolerance`.
    pub fn largest_box(&self, tolerance: f64) -> BoxDims {
        let [nx, ny, nz] = self.dims;
        let ok = self.prefix_valid(tolerance);
        let mut best: Option<(usize, [usize; 3])> = None;
        for i in 0..nx {
            for j in 0..ny {
                let row = &ok[(i * ny + j) * nz..(i * ny + j + 1) * nz];
                let Some(k) = row.iter().rposition(|&v| v) else {
                    continue;
                };
                let count = (2 * i + 1) * (2 * j + 1) * (2 * k + 1);
                if best.map_or(true, |(c, _)| count > c) {
                    best = Some((count, [i, j, k]));
                }
            }
        }
        let [i, j, k] = best.map(|(_, h)| h).unwrap_or([0, 0, 0]);
        let span = |h: usize| 2.0 * h as f64 * self.step_mm;
        BoxDims {
            dx_mm: span(i),
            dy_mm: span(j),
            dz_mm: span(k),
        }
    }

    /// Edge (mm) of the largest origin-centred cube whose points all pass `tolerance`.
    pub fn largest_cube(&self, tolerance: f64) -> f64 {
        let ok = self.prefix_valid(tolerance);
        let [nx, ny, nz] = self.dims;
        let limit = nx.min(ny).min(nz);
        let half = (0..limit)
            .take_while(|&h| ok[(h * ny + h) * nz + h])
            .last()
            .unwrap_or(0);
        2.0 * half as f64 * self.step_mm
    }
}

/// Largest centred box in which every single-axis configuration stays within `tolerance`.
pub fn homogeneity_volume(
    coil: &TriaxialCoil,
    currents: [f64; 3],
    tolerance: f64,
    grid_step_mm: f64,
) -> Result<BoxDims> {
    Ok(DeviationGrid::scan(coil, currents, tolerance, grid_step_mm)?.largest_box(tolerance))
}

/// Edge (mm) of the largest uniform cube for one pair energized alone.
pub fn axis_working_cube(
    coil: &TriaxialCoil,
    axis: Axis,
    current: f64,
    tolerance: f64,
    grid_step_mm: f64,
) -> Result<f64> {
    let mut currents = [0.0; 3];
    currents[axis.index()] = current;
    Ok(DeviationGrid::scan(coil, currents, tolerance, grid_step_mm)?.largest_cube(tolerance))
}

/// One field sample for CSV output; coordinates in mm, field in mT.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub point_mm: [f64; 3],
    pub b_mt: [f64; 3],
}

/// Field on a centred cubic grid of half-extent `half_extent_mm`, x-major order.
pub fn scan_grid(
    coil: &TriaxialCoil,
    currents: [f64; 3],
    half_extent_mm: f64,
    grid_step_mm: f64,
) -> Result<Vec<FieldSample>> {
    if !(grid_step_mm > 0.0) || !(half_extent_mm >= 0.0) {
        return Err(Error::input(
            "scan needs grid step > 0 and half extent >= 0",
        ));
    }
    let n = (half_extent_mm / grid_step_mm + 1e-9).floor() as i64;
    let side = (2 * n + 1) as usize;
    (0..side * side * side)
        .into_par_iter()
        .map(|flat| {
            let c = |v: usize| (v as i64 - n) as f64 * grid_step_mm;
            let point_mm = [
                c(flat / (side * side)),
                c((flat / side) % side),
                c(flat % side),
            ];
            let b = coil.field(currents, &(Vector3::from(point_mm) * 1e-3))? * 1e3;
            Ok(FieldSample {
                point_mm,
                b_mt: [b.x, b.y, b.z],
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn zero_current_gives_zero_field() {
        let b = loop_field(0.1, 0.0, 100.0, &Vector3::new(0.01, 0.02, 0.03)).unwrap();
        assert_eq!(b, Vector3::zeros());
    }

    #[test]
    fn on_axis_loop_matches_closed_form() {
        for d in [0.0, 0.02, 0.05, 0.1, 0.3] {
            let b = loop_field(0.1, 2.0, 50.0, &Vector3::new(0.0, 0.0, d)).unwrap();
            let analytic = loop_on_axis_analytic(0.1, 2.0, 50.0, d);
            assert!(rel(b.z, analytic) < 1e-4, "d={d}: {} vs {analytic}", b.z);
            assert!(b.x.abs() < 1e-12 * analytic && b.y.abs() < 1e-12 * analytic);
        }
    }

    #[test]
    fn current_sign_flips_field() {
        let p = Vector3::new(0.03, -0.01, 0.02);
        let a = loop_field(0.1, 1.5, 10.0, &p).unwrap();
        let b = loop_field(0.1, -1.5, 10.0, &p).unwrap();
        assert!((a + b).norm() < 1e-15 * a.norm());
    }

    #[test]
    fn points_on_the_wire_are_singular() {
        let err = loop_field(0.1, 1.0, 1.0, &Vector3::new(0.1002, 0.0, 0.0)).unwrap_err();
        assert!(matches!(err, Error::Singularity { .. }));
        assert!(loop_field(0.0, 1.0, 1.0, &Vector3::zeros()).is_err());
    }

    #[test]
    fn helmholtz_center_matches_closed_form() {
        for axis in Axis::ALL {
            let coil = CoilAxis::default_for(axis);
            let b = pair_field(&coil, 1.0, &Vector3::zeros()).unwrap();
            let along = b.dot(&axis.unit());
            assert!(rel(along, coil.center_field_per_amp_analytic()) < 1e-3);
            let transverse = (b - axis.unit() * along).norm();
            assert!(transverse <= 1e-10 * along.abs(), "{axis:?}: {transverse}");
        }
    }

    #[test]
    fn z_pair_center_constant() {
        // (4/5)^{3/2} * 4 pi e-7 * 480 / 0.1, evaluated independently.
        let expected = 0.8f64.sqrt().powi(3) * 4.0 * std::f64::consts::PI * 1e-7 * 480.0 / 0.1;
        assert!((expected - 4.3160e-3).abs() < 1e-7);
        let b = pair_field(&CoilAxis::default_for(Axis::Z), 1.0, &Vector3::zeros()).unwrap();
        assert!(rel(b.z, expected) < 1e-3);
    }

    #[test]
    fn current_for_field_inverts_center_field() {
        let z = CoilAxis::default_for(Axis::Z);
        assert_eq!(current_for_field(&z, 0.0).unwrap(), 0.0);
        let i = current_for_field(&z, 5.0).unwrap();
        assert!((i - 5.0 / 4.3160).abs() < 2e-3, "{i}");
        for axis in Axis::ALL {
            let c = CoilAxis::default_for(axis);
            for b in [-3.0, 0.7, 5.0] {
                let i = current_for_field(&c, b).unwrap();
                let back = pair_field(&c, i, &Vector3::zeros())
                    .unwrap()
                    .dot(&axis.unit())
                    * 1e3;
                assert!(rel(back, b) < 1e-3);
                assert_eq!(i.signum(), b.signum());
            }
        }
        assert!(current_for_field(&z, f64::NAN).is_err());
    }

    #[test]
    fn default_coil_validates_and_rejects_bad_nesting() {
        let mut coil = TriaxialCoil::default();
        coil.validate().unwrap();
        coil.axes[2].outer_diameter_mm = 500.0;
        assert!(coil.validate().is_err());
        let mut bad = CoilAxis::default_for(Axis::Y);
        bad.inner_diameter_mm = 400.0;
        assert!(bad.validate().is_err());
        bad = CoilAxis::default_for(Axis::Y);
        bad.turns = 0;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn superposition_of_pairs() {
        let coil = TriaxialCoil::default();
        let p = Vector3::new(0.011, -0.007, 0.019);
        let currents = [0.4, -1.1, 0.9];
        let total = coil.field(currents, &p).unwrap();
        let mut sum = Vector3::zeros();
        for (a, i) in coil.axes.iter().zip(currents) {
            sum += pair_field(a, i, &p).unwrap();
        }
        assert!((total - sum).norm() <= 1e-14 * sum.norm());
    }

    #[test]
    fn currents_for_reproduce_drive_vector() {
        let coil = TriaxialCoil::default();
        let target = Vector3::new(2.0, -1.0, 3.5);
        let i = coil.currents_for(&target).unwrap();
        let b = coil.field(i, &Vector3::zeros()).unwrap() * 1e3;
        assert!((b - target).norm() < 1e-3 * target.norm());
    }

    #[test]
    fn oscillating_field_examples() {
        let s = DriveSignal {
            b_xy_mt: 4.0,
            yaw_deg: 30.0,
            b_z_mt: 2.0,
            frequency_hz: 11.0,
            phase_rad: 0.0,
        };
        let b0 = oscillating_field(&s, 0.0);
        assert!((b0.x - 4.0 * 30f64.to_radians().cos()).abs() < 1e-15);
        assert!((b0.y - 4.0 * 30f64.to_radians().sin()).abs() < 1e-15);
        assert_eq!(b0.z, 0.0);
        let peak = oscillating_field(&s, 1.0 / (4.0 * 11.0));
        assert!((peak.z - 2.0).abs() < 1e-12);
    }

    #[test]
    fn equal_components_give_45_degree_pitch() {
        let s = DriveSignal::with_pitch(4.0, 45.0, 0.0, 11.0);
        assert!((s.b_z_mt - 4.0).abs() < 1e-12);
        assert!((s.pitch_deg().unwrap() - 45.0).abs() < 1e-9);
        let flat = DriveSignal { b_xy_mt: 0.0, ..s };
        assert!(flat.pitch_deg().is_none());
        assert!(DriveSignal { b_z_mt: -1.0, ..s }.validate().is_err());
    }

    #[test]
    fn box_search_on_handmade_grid() {
        // 3x3x3 octant; only the far x column fails.
        let mut values = vec![0.0; 27];
        for j in 0..3 {
            for k in 0..3 {
                values[(2 * 3 + j) * 3 + k] = 1.0;
            }
        }
        let g = DeviationGrid {
            step_mm: 1.0,
            dims: [3, 3, 3],
            values,
        };
        let b = g.largest_box(0.5);
        assert_eq!(b.as_array(), [2.0, 4.0, 4.0]);
        assert_eq!(g.largest_cube(0.5), 2.0);
        assert_eq!(g.largest_cube(2.0), 4.0);
    }

    #[test]
    fn tiny_tolerance_gives_empty_box() {
        let coil = TriaxialCoil::default();
        let b = homogeneity_volume(&coil, [0.0, 0.0, 1.0], 1e-12, 2.0).unwrap();
        assert!(b.is_empty());
        assert!(homogeneity_volume(&coil, [0.0; 3], 0.01, 2.0).is_err());
        assert!(homogeneity_volume(&coil, [1.0; 3], 1.5, 2.0).is_err());
        assert!(homogeneity_volume(&coil, [1.0; 3], 0.01, 0.0).is_err());
    }

    #[test]
    fn scan_grid_orders_rows_x_major() {
        let coil = TriaxialCoil::default();
        let rows = scan_grid(&coil, [0.0, 0.0, 1.0], 2.0, 2.0).unwrap();
        assert_eq!(rows.len(), 27);
        assert_eq!(rows[0].point_mm, [-2.0, -2.0, -2.0]);
        assert_eq!(rows[1].point_mm, [-2.0, -2.0, 0.0]);
        assert_eq!(rows[13].point_mm, [0.0, 0.0, 0.0]);
        assert!((rows[13].b_mt[2] - 4.3160).abs() < 5e-3);
    }
}
