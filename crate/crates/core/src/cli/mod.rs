//! Batch command-line front end.
//!
//! Each subcommand reads an optional TOML config, writes CSV (and optional
//! SVG) files atomically into the output directory and prints a short
//! summary. Exit codes: 0 success, 1 design-rule failure under `--strict`,
//! 2 usage, config or input error, 3 numeric failure.

mod commands;
pub mod config;
pub mod output;

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use thiserror::Error;

use crate::bvd::BvdError;
use crate::design::DesignError;
use crate::dispersion::DispersionError;
use crate::material::MaterialError;
use crate::sparams::{Kernel, SparamsError};
use crate::spectrum::SpectrumError;
use crate::thickness_mode::ThicknessError;

pub use config::RunConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RULE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("input: {0}")]
    Input(String),
    #[error("writing {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("design rules failed: {0}")]
    RuleFailure(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Input(_) | CliError::Io { .. } => EXIT_CONFIG,
            CliError::Numeric(_) => EXIT_NUMERIC,
            CliError::RuleFailure(_) => EXIT_RULE,
        }
    }
}

impl From<MaterialError> for CliError {
    fn from(e: MaterialError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<SpectrumError> for CliError {
    fn from(e: SpectrumError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<ThicknessError> for CliError {
    fn from(e: ThicknessError) -> Self {
        match e {
            ThicknessError::InvalidPlate(_) | ThicknessError::Spectrum(_) => CliError::Config(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<BvdError> for CliError {
    fn from(e: BvdError) -> Self {
        match e {
            BvdError::Argument(_) | BvdError::Spectrum(_) => CliError::Input(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<SparamsError> for CliError {
    fn from(e: SparamsError) -> Self {
        match e {
            SparamsError::Pole { .. } | SparamsError::EmptyBand { .. } => CliError::Numeric(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<DispersionError> for CliError {
    fn from(e: DispersionError) -> Self {
        match e {
            DispersionError::Argument(_) => CliError::Config(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<DesignError> for CliError {
    fn from(e: DesignError) -> Self {
        match e {
            DesignError::Dispersion(d) => d.into(),
            DesignError::Thickness(t) => t.into(),
            DesignError::Parse { .. } => CliError::Input(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

/// Piezoelectric plate resonator design and analysis.
#[derive(Debug, Parser)]
#[command(name = "ringbaw", version, about, propagate_version = true)]
pub struct Cli {
    /// TOML run configuration; all keys optional, unknown keys rejected
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`; default: current directory)
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Also write an SVG plot next to each CSV
    #[arg(long, global = true)]
    pub svg: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Coupling factors k²_33, k²_35, k²_34 against rotated-Y-cut angle
    /// (coupling.csv)
    CouplingSweep,
    /// Plate impedance from the thickness-mode or equivalent-circuit model
    /// (impedance.csv)
    Impedance,
    /// Fit the four-element equivalent circuit to a measured spectrum
    /// (bvd_fit.txt, bvd_fit.csv)
    BvdFit {
        /// Touchstone `.s1p` file or impedance CSV `freq_hz,re_z,im_z`
        #[arg(long, value_name = "PATH")]
        input: PathBuf,
        /// Reference impedance for impedance-CSV input [ohm] (default 50)
        #[arg(long)]
        z0: Option<f64>,
    },
    /// Bode quality factor of a measured reflection spectrum
    /// (bode_q.csv, bode_summary.txt)
    BodeQ {
        /// Touchstone `.s1p` file or impedance CSV `freq_hz,re_z,im_z`
        #[arg(long, value_name = "PATH")]
        input: PathBuf,
        /// Smoothing window in samples (default 80)
        #[arg(long)]
        window: Option<usize>,
        /// Reference impedance for impedance-CSV input [ohm] (default 50)
        #[arg(long)]
        z0: Option<f64>,
        /// Smoothing kernel: mean or median (default mean)
        #[arg(long)]
        kernel: Option<Kernel>,
    },
    /// Plate dispersion branches and characteristic lengths
    /// (dispersion.csv, lengths.txt)
    Dispersion,
    /// Grounded-ring geometry synthesis or rule check
    /// (design_geometry.txt, design_rules.csv)
    Design {
        /// Exit with status 1 when a mandatory rule fails
        #[arg(long)]
        strict: bool,
        /// Geometry file (`key = value` lines) to check instead of synthesising
        #[arg(long, value_name = "PATH")]
        input: Option<PathBuf>,
    },
    /// Print the version
    Version,
}

/// Runs one parsed command line, writing the summary to `stdout`.
pub fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let ctx = commands::Context {
        out_dir: cli
            .out
            .clone()
            .or_else(|| cfg.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from(".")),
        svg: cli.svg,
    };
    match &cli.command {
        Command::CouplingSweep => commands::coupling_sweep(&cfg, &ctx, stdout),
        Command::Impedance => commands::impedance(&cfg, &ctx, stdout),
        Command::BvdFit { input, z0 } => commands::bvd_fit(&cfg, &ctx, input, *z0, stdout),
        Command::BodeQ { input, window, z0, kernel } => {
            let mut bode = cfg.bode;
            bode.window = window.unwrap_or(bode.window);
            bode.z0 = z0.unwrap_or(bode.z0);
            bode.kernel = kernel.unwrap_or(bode.kernel);
            commands::bode_q(&ctx, input, bode, stdout)
        }
        Command::Dispersion => commands::dispersion(&cfg, &ctx, stdout),
        Command::Design { strict, input } => commands::design(&cfg, &ctx, input.as_deref(), *strict, stdout),
        Command::Version => {
            writeln!(stdout, "ringbaw {}", env!("CARGO_PKG_VERSION")).map_err(stdout_err)
        }
    }
}

fn stdout_err(source: std::io::Error) -> CliError {
    CliError::Io { path: "<stdout>".into(), source }
}

/// Runs the command line and returns the process exit code; errors go to
/// stderr.
pub fn run(cli: &Cli) -> i32 {
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match execute(cli, &mut lock) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = lock.flush();
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
