//! Configuration, calibration, sweeps, experiments and file output.

pub mod calibrate;
pub mod config;
pub mod experiment;
pub mod output;
pub mod sweep;

pub use calibrate::{calibrate, Calibration, CalibrationReport};
pub use config::{CalibrationStatus, ExperimentConfig};
pub use experiment::{run_experiment, ExperimentOutcome};
pub use sweep::{run_sweep, sensitivity_compare, SensitivityReport, SweepResult};
