use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rayswim::harness::experiment::{field_scan_csv, homogeneity_report, surface_csv};
use rayswim::harness::output::{json, write_file, Provenance};
use rayswim::harness::{
    calibrate, run_experiment, run_sweep, sensitivity_compare, ExperimentConfig,
};
use rayswim::{Error, Result};

#[derive(Parser)]
#[command(
    name = "rayswim",
    version,
    about = "Magnetic milliswimmer simulator and experiment harness"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Configuration file (`key = value` lines). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Integrator step in milliseconds; overrides `integrator.dt_ms`.
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Field grid spacing in millimetres; overrides `field.grid_step_mm`.
    #[arg(long = "grid-step", global = true)]
    grid_step: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Coil field scans and homogeneity volumes.
    Field {
        #[command(subcommand)]
        action: FieldAction,
    },
    /// Fit thrust and hinge parameters; writes calibrated.cfg.
    Calibrate,
    /// Steady speed over the B x f grid.
    Sweep,
    /// Integrate a trajectory plan.
    Run {
        /// Z, square, nabla, or file (segments from the config).
        #[arg(long)]
        plan: String,
    },
    /// Fin surface displacement over one period.
    Surface {
        #[arg(long, default_value_t = 25)]
        nx: usize,
        #[arg(long, default_value_t = 25)]
        ny: usize,
        #[arg(long, default_value_t = 16)]
        nt: usize,
    },
    /// Per-step speed change from frequency versus field strength.
    Sensitivity,
}

#[derive(Subcommand)]
enum FieldAction {
    /// Field of all three pairs on a centred cubic grid.
    Scan {
        /// Current in every pair (A).
        #[arg(long, default_value_t = 1.0)]
        current: f64,
        /// Half-width of the scanned cube (mm).
        #[arg(long, default_value_t = 40.0)]
        half_extent: f64,
    },
    /// Working volumes for the configured tolerances.
    Homogeneity {
        #[arg(long, default_value_t = 1.0)]
        current: f64,
    },
}

fn load_config(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            ExperimentConfig::parse(&text)?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    if let Some(dt) = common.dt {
        cfg.dt_ms = dt;
    }
    if let Some(step) = common.grid_step {
        cfg.grid_step_mm = step;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<Vec<PathBuf>> {
    let cfg = load_config(&cli.common)?;
    let out = cfg.output_dir.clone();
    let prov = Provenance::new(cfg.hash());
    match cli.command {
        Command::Field {
            action:
                FieldAction::Scan {
                    current,
                    half_extent,
                },
        } => Ok(vec![write_file(
            &out,
            "field_scan.csv",
            &field_scan_csv(&cfg, current, half_extent)?,
        )?]),
        Command::Field {
            action: FieldAction::Homogeneity { current },
        } => {
            let report = homogeneity_report(&cfg, current)?;
            Ok(vec![write_file(
                &out,
                "homogeneity.json",
                &json(&prov, &report)?,
            )?])
        }
        Command::Calibrate => {
            let fit = calibrate(&cfg)?;
            let fitted_prov = Provenance::new(fit.config.hash());
            let header = format!(
                "# fitted parameters; config_hash={} version={}\n",
                fitted_prov.config_hash, fitted_prov.version
            );
            Ok(vec![
                write_file(&out, "calibrated.cfg", &(header + &fit.config.serialize()))?,
                write_file(&out, "calibration.json", &json(&fitted_prov, &fit.report)?)?,
            ])
        }
        Command::Sweep => Ok(vec![write_file(
            &out,
            "sweep.csv",
            &run_sweep(&cfg)?.to_csv(),
        )?]),
        Command::Run { plan } => run_experiment(&cfg, &plan)?.write(&out),
        Command::Surface { nx, ny, nt } => Ok(vec![write_file(
            &out,
            "surface.csv",
            &surface_csv(&cfg, nx, ny, nt)?,
        )?]),
        Command::Sensitivity => {
            let report = sensitivity_compare(&cfg)?;
            Ok(vec![write_file(
                &out,
                "sensitivity.json",
                &json(&prov, &report)?,
            )?])
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
