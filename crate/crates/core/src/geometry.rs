//! Robot dimensions, the NACA 4-digit body profile, and the magnetized fin volume.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{CubicMetres, Millimetres, MM3_TO_M3};

/// A flat rectangular fin film, dimensions in millimetres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FinDims {
    /// Spanwise extent from the body root.
    pub width: f64,
    /// Chordwise extent.
    pub length: f64,
    pub thickness: f64,
}

impl FinDims {
    pub fn volume_mm3(&self) -> f64 {
        self.width * self.length * self.thickness
    }
}

/// Overall robot dimensions, all in millimetres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotGeometry {
    pub body_length: f64,
    pub body_width: f64,
    pub body_height: f64,
    pub overall_width: f64,
    pub front_fin: FinDims,
    pub rear_fin: FinDims,
}

impl Default for RobotGeometry {
    fn default() -> Self {
        Self {
            body_length: 11.34,
            body_width: 2.0,
            body_height: 1.5,
            overall_width: 20.56,
            front_fin: FinDims {
                width: 9.72,
                length: 1.0,
                thickness: 0.12,
            },
            rear_fin: FinDims {
                width: 9.41,
                length: 8.66,
                thickness: 0.12,
            },
        }
    }
}

impl RobotGeometry {
    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("body_length", self.body_length),
            ("body_width", self.body_width),
            ("body_height", self.body_height),
            ("overall_width", self.overall_width),
            ("front_fin.width", self.front_fin.width),
            ("front_fin.length", self.front_fin.length),
            ("front_fin.thickness", self.front_fin.thickness),
            ("rear_fin.width", self.rear_fin.width),
            ("rear_fin.length", self.rear_fin.length),
            ("rear_fin.thickness", self.rear_fin.thickness),
        ];
        for (name, v) in dims {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::input(format!(
                    "geometry.{name} must be > 0, got {v}"
                )));
            }
        }
        // Fins overlap the body edge, so only W >= w_body is required.
        if self.overall_width < self.body_width {
            return Err(Error::input(format!(
                "overall width {} mm is narrower than the body ({} mm)",
                self.overall_width, self.body_width
            )));
        }
        Ok(())
    }

    pub fn body_length_mm(&self) -> Millimetres {
        Millimetres(self.body_length)
    }

    /// Chord of the combined pectoral fin (front strip plus rear film).
    pub fn fin_chord(&self) -> f64 {
        self.front_fin.length + self.rear_fin.length
    }

    /// Span of the pectoral fin measured from the body root.
    pub fn fin_span(&self) -> f64 {
        self.front_fin.width
    }
}

/// Total magnetized volume: both front fins, each a rectangular film.
/// The rear fins carry no magnetization.
pub fn magnetized_volume(geometry: &RobotGeometry) -> Result<CubicMetres> {
    geometry.validate()?;
    Ok(CubicMetres(
        2.0 * geometry.front_fin.volume_mm3() * MM3_TO_M3,
    ))
}

/// Parsed NACA 4-digit designation `MPTT`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Naca4 {
    /// Maximum camber as a fraction of chord.
    pub max_camber: f64,
    /// Chordwise position of maximum camber as a fraction of chord.
    pub camber_position: f64,
    /// Maximum thickness as a fraction of chord.
    pub thickness: f64,
}

impl Naca4 {
    pub fn parse(code: &str) -> Result<Self> {
        let digits: Vec<u32> = code.chars().filter_map(|c| c.to_digit(10)).collect();
        if code.len() != 4 || digits.len() != 4 {
            return Err(Error::input(format!(
                "NACA code must be 4 decimal digits, got {code:?}"
            )));
        }
        let thickness = f64::from(digits[2] * 10 + digits[3]) / 100.0;
        if thickness == 0.0 {
            return Err(Error::input("NACA thickness digits must be non-zero"));
        }
        Ok(Self {
            max_camber: f64::from(digits[0]) / 100.0,
            camber_position: f64::from(digits[1]) / 10.0,
            thickness,
        })
    }

    /// Half-thickness at normalized chord position `xc` in [0, 1], as a fraction of chord.
    pub fn half_thickness(&self, xc: f64) -> f64 {
        5.0 * self.thickness
            * (0.2969 * xc.sqrt() - 0.1260 * xc - 0.3516 * xc.powi(2) + 0.2843 * xc.powi(3)
                - 0.1015 * xc.powi(4))
    }

    /// Mean camber line height at `xc`, as a fraction of chord.
    pub fn camber(&self, xc: f64) -> f64 {
        let (m, p) = (self.max_camber, self.camber_position);
        if m == 0.0 || p == 0.0 {
            return 0.0;
        }
        if xc < p {
            m / (p * p) * (2.0 * p * xc - xc * xc)
        } else {
            m / ((1.0 - p) * (1.0 - p)) * ((1.0 - 2.0 * p) + 2.0 * p * xc - xc * xc)
        }
    }

    pub fn is_symmetric(&self) -> bool {
        self.max_camber == 0.0
    }
}

/// Samples the thickness distribution at `n_points` evenly spaced chordwise stations.
/// Returns `(x, half_thickness)` pairs in millimetres, x running from 0 to `chord`.
pub fn naca4_thickness_profile(code: &str, chord: f64, n_points: usize) -> Result<Vec<(f64, f64)>> {
    let profile = Naca4::parse(code)?;
    if !(chord.is_finite() && chord > 0.0) {
        return Err(Error::input(format!("chord must be > 0, got {chord}")));
    }
    if n_points < 2 {
        return Err(Error::input("profile needs at least 2 points"));
    }
    let last = (n_points - 1) as f64;
    Ok((0..n_points)
        .map(|i| {
            let xc = i as f64 / last;
            (xc * chord, profile.half_thickness(xc) * chord)
        })
        .collect())
}
