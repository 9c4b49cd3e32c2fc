//! Command surface of `fpcs-lab`: scenario ingestion, commands and report emission.

pub mod commands;
pub mod output;
pub mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

pub use commands::{execute, Outputs};
pub use scenario::{Loaded, Scenario};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Malformed scenario or arguments.
    #[error("{0}")]
    Schema(String),
    #[error("{0}")]
    Numerical(fpcs_core::Error),
    #[error("{0}")]
    Io(String),
    /// A verification suite ran but did not pass.
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Schema(_) => 2,
            CliError::Numerical(fpcs_core::Error::ScaleLimit { .. }) => 4,
            CliError::Numerical(_) => 3,
            CliError::Io(_) | CliError::Failed(_) => 1,
        }
    }

    /// Machine-readable error report for numerical failures.
    pub fn report(&self) -> Option<String> {
        match self {
            CliError::Numerical(e) => Some(
                serde_json::json!({ "error": e.name(), "message": e.to_string() }).to_string(),
            ),
            _ => None,
        }
    }
}

impl From<fpcs_core::Error> for CliError {
    fn from(e: fpcs_core::Error) -> Self {
        CliError::Numerical(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Simulator and analyzer for finitely piecewise constant subgradient systems.
#[derive(Debug, Parser)]
#[command(name = "fpcs-lab", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Write output files into this directory instead of printing to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for sweeps and suites.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Seed for random perturbations and sampling.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Number of perturbed runs in a sweep.
    #[arg(long, global = true)]
    pub runs: Option<usize>,
    /// Override for γ in the constants recursion.
    #[arg(long, global = true)]
    pub gamma: Option<f64>,
    /// Format of what is printed to stdout.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the unperturbed and perturbed trajectories.
    Simulate { scenario: PathBuf },
    /// Critical points, CNC, basins and γ.
    Analyze { scenario: PathBuf },
    /// The recursive sensitivity constant κ.
    Constants { scenario: PathBuf },
    /// Monte Carlo deviation sweep.
    Sensitivity { scenario: PathBuf },
    /// Run a property suite (or `all`).
    Verify {
        #[arg(long)]
        suite: String,
    },
}

/// Parse-free entry point shared by `main` and the tests.
pub fn run(cli: &Cli) -> ExitCode {
    let result = match cli.jobs {
        Some(0) => Err(CliError::Schema("--jobs must be at least 1".into())),
        Some(k) => match rayon::ThreadPoolBuilder::new().num_threads(k).build() {
            Ok(pool) => pool.install(|| execute(cli)),
            Err(e) => Err(CliError::Io(e.to_string())),
        },
        None => execute(cli),
    }
    .and_then(|out| out.emit(cli));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let Some(r) = e.report() {
                println!("{r}");
            }
            ExitCode::from(e.exit_code())
        }
    }
}
