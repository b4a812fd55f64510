//! Simulator and experiment harness for a magnetically driven ray-like milliswimmer
//! steered by a tri-axial Helmholtz coil.

pub mod actuation;
pub mod control;
pub mod error;
pub mod field;
pub mod geometry;
pub mod harness;
pub mod kinematics;
pub mod locomotion;
pub mod units;

pub use error::{Error, Result};
