//! CSV, JSON and SVG emission. Every file carries the config hash and crate version.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::locomotion::TrajectoryRecord;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub config_hash: String,
    pub version: String,
}

impl Provenance {
    pub fn new(config_hash: impl Into<String>) -> Self {
        Self {
            config_hash: config_hash.into(),
            version: VERSION.to_string(),
        }
    }

    fn line(&self) -> String {
        format!("config_hash={} version={}", self.config_hash, self.version)
    }
}

/// A provenance comment line, then the header, then one line per row, `\n` terminated.
pub fn csv<R: AsRef<[f64]>>(
    prov: &Provenance,
    header: &[&str],
    rows: &[R],
    decimals: usize,
) -> String {
    let mut s = format!("# {}\n{}\n", prov.line(), header.join(","));
    for row in rows {
        let cells: Vec<String> = row
            .as_ref()
            .iter()
            .map(|v| format!("{v:.decimals$}"))
            .collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

#[derive(Serialize)]
struct WithProvenance<'a, T: Serialize> {
    provenance: &'a Provenance,
    #[serde(flatten)]
    body: &'a T,
}

pub fn json<T: Serialize>(prov: &Provenance, body: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&WithProvenance {
        provenance: prov,
        body,
    })
    .map_err(|e| Error::Analysis(format!("JSON encoding failed: {e}")))?;
    s.push('\n');
    Ok(s)
}

pub fn trajectory_csv(prov: &Provenance, record: &TrajectoryRecord) -> String {
    let rows: Vec<[f64; 6]> = record
        .samples
        .iter()
        .map(|s| {
            [
                s.t,
                s.state.x,
                s.state.y,
                s.state.psi.to_degrees(),
                s.state.speed(),
                s.gamma_cmd_deg,
            ]
        })
        .collect();
    csv(
        prov,
        &["t_s", "x_mm", "y_mm", "psi_deg", "v_mm_s", "gamma_cmd_deg"],
        &rows,
        6,
    )
}

const SVG_SIZE: f64 = 600.0;
const SVG_MARGIN: f64 = 30.0;
const SVG_MAX_POINTS: usize = 2000;

/// Self-contained overlay of the simulated path (solid) on the target polyline (dashed).
pub fn trajectory_svg(
    prov: &Provenance,
    title: &str,
    record: &TrajectoryRecord,
    target: &[[f64; 2]],
) -> String {
    let path = record.points();
    let all = path.iter().chain(target.iter());
    let (mut x0, mut y0, mut x1, mut y1) = (
        f64::INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::NEG_INFINITY,
    );
    for p in all {
        x0 = x0.min(p[0]);
        y0 = y0.min(p[1]);
        x1 = x1.max(p[0]);
        y1 = y1.max(p[1]);
    }
    if !x0.is_finite() {
        (x0, y0, x1, y1) = (0.0, 0.0, 1.0, 1.0);
    }
    let span = (x1 - x0).max(y1 - y0).max(1e-9);
    let scale = (SVG_SIZE - 2.0 * SVG_MARGIN) / span;
    // Screen y grows downward.
    let map = |p: &[f64; 2]| {
        format!(
            "{:.2},{:.2}",
            SVG_MARGIN + (p[0] - x0) * scale,
            SVG_SIZE - SVG_MARGIN - (p[1] - y0) * scale
        )
    };
    let stride = path.len().div_ceil(SVG_MAX_POINTS).max(1);
    let mut sim: Vec<String> = path.iter().step_by(stride).map(map).collect();
    if let Some(last) = path.last() {
        if (path.len() - 1) % stride != 0 {
            sim.push(map(last));
        }
    }
    let tgt: Vec<String> = target.iter().map(map).collect();
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_SIZE}" height="{SVG_SIZE}" viewBox="0 0 {SVG_SIZE} {SVG_SIZE}">"#
    );
    let _ = writeln!(s, "<!-- {} -->", prov.line());
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{SVG_MARGIN}" y="20" font-family="sans-serif" font-size="14">{}</text>"#,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<polyline points="{}" fill="none" stroke="gray" stroke-width="2" stroke-dasharray="6,4"/>"#,
        tgt.join(" ")
    );
    let _ = writeln!(
        s,
        r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="1.5"/>"#,
        sim.join(" ")
    );
    let _ = writeln!(
        s,
        r#"<text x="{SVG_MARGIN}" y="{}" font-family="sans-serif" font-size="11">{:.1} mm full scale</text>"#,
        SVG_SIZE - 8.0,
        span
    );
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|source| Error::Output {
        path: dir.to_path_buf(),
        source,
    })?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|source| Error::Output {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}
