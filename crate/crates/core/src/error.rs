use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("field point lies within {clearance_mm:.3} mm of the loop wire")]
    Singularity { clearance_mm: f64 },

    #[error("analysis failed: {0}")]
    Analysis(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("calibration failed; violated constraints: {}", .violated.join("; "))]
    Calibration { violated: Vec<String> },

    #[error("parameters are not calibrated; run `rayswim calibrate --config <cfg> --out <dir>` and pass <dir>/calibrated.cfg")]
    NotCalibrated,

    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Process exit code used by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::NotCalibrated => 2,
            Error::Calibration { .. } => 3,
            _ => 1,
        }
    }
}
