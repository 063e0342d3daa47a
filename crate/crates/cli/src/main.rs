use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use pnbm_core::pnbm::OutcomeLabel;
use pnbm_core::Execution;

mod commands;
mod output;
mod selftest;

use output::Format;

/// Residual tolerance used when `--tol` is not given.
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Parser)]
#[command(
    name = "pnbm",
    version,
    about = "Partial Bell measurement and partial teleportation simulator"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Seed for every random draw.
    #[arg(long, global = true, env = "PNBM_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Output file (directory for `bounds`). Defaults to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Residual tolerance for the exit status.
    #[arg(long, global = true, default_value_t = DEFAULT_TOL, value_parser = parse_tol)]
    pub tol: f64,
    /// Disable multi-threading.
    #[arg(long, global = true)]
    pub sequential: bool,
}

fn parse_tol(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(t) if t >= 0.0 && t.is_finite() => Ok(t),
        Ok(t) => Err(format!(
            "tolerance must be finite and non-negative, got {t}"
        )),
        Err(e) => Err(e.to_string()),
    }
}

impl GlobalArgs {
    pub fn execution(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::default()
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the teleportation protocol once and report the fidelities.
    Teleport(TeleportArgs),
    /// Teleport a random input across an α grid.
    SweepQubit(GridArgs),
    /// Mean operation and estimation fidelities across an α grid.
    SweepMeasurement(MeasurementArgs),
    /// Continuous-variable fidelities across a (κ, r) grid.
    SweepCv(CvArgs),
    /// Write the optimal fidelity curves with and without entanglement.
    Bounds(BoundsArgs),
    /// Check the headline numbers and exit non-zero on any failure.
    Selftest,
}

#[derive(Debug, Args)]
pub struct TeleportArgs {
    /// Ancilla weight α in [0, 1].
    #[arg(long)]
    pub alpha: f64,
    /// Amplitude of |0⟩, e.g. `0.6` or `0.6+0.1i`.
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    pub state_a: Complex64,
    /// Amplitude of |1⟩.
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    pub state_b: Complex64,
    /// Force the measurement outcome (`00`, `01`, `10`, `11`).
    #[arg(long)]
    pub outcome: Option<OutcomeLabel>,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long, default_value_t = 0.0)]
    pub start: f64,
    #[arg(long, default_value_t = 1.0)]
    pub stop: f64,
    #[arg(long, default_value_t = 101)]
    pub points: usize,
    /// Explicit comma-separated grid, overriding start/stop/points.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with_all = ["start", "stop", "points"])]
    pub values: Option<Vec<f64>>,
}

impl GridArgs {
    pub fn grid(&self) -> pnbm_core::Result<Vec<f64>> {
        match &self.values {
            Some(v) if v.is_empty() => Err(pnbm_core::Error::TooFew {
                what: "grid points",
                min: 1,
                got: 0,
            }),
            Some(v) => Ok(v.clone()),
            None => pnbm_core::sweep::linspace(self.start, self.stop, self.points),
        }
    }
}

#[derive(Debug, Args)]
pub struct MeasurementArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    /// Haar samples per row for the Monte-Carlo columns.
    #[arg(long, default_value_t = 100_000)]
    pub mc_samples: usize,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[arg(long, value_delimiter = ',', default_value = "0.5,1,2")]
    pub kappa: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0,0.5,1,2,20")]
    pub r: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long, default_value_t = 201)]
    pub points: usize,
}

/// Why a command did not succeed.
#[derive(Debug)]
pub enum Failure {
    /// A residual or check exceeded its tolerance.
    Violation(String),
    /// Bad arguments, invalid parameters or I/O trouble.
    Usage(anyhow::Error),
}

macro_rules! usage_from {
    ($($t:ty),*) => {
        $(impl From<$t> for Failure {
            fn from(e: $t) -> Self {
                Failure::Usage(e.into())
            }
        })*
    };
}

usage_from!(anyhow::Error, pnbm_core::Error, std::io::Error);

pub type CmdResult = std::result::Result<(), Failure>;

fn run(cli: &Cli) -> CmdResult {
    match &cli.command {
        Command::Teleport(a) => commands::teleport(&cli.global, a),
        Command::SweepQubit(a) => commands::sweep_qubit(&cli.global, a),
        Command::SweepMeasurement(a) => commands::sweep_measurement(&cli.global, a),
        Command::SweepCv(a) => commands::sweep_cv(&cli.global, a),
        Command::Bounds(a) => commands::bounds(&cli.global, a),
        Command::Selftest => selftest::run(&cli.global),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Violation(msg)) => {
            eprintln!("pnbm: residual check failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(e)) => {
            eprintln!("pnbm: error: {e:#}");
            ExitCode::from(2)
        }
    }
}
