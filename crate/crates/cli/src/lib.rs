//! Command-line harness over the `edgelap` library: certificate reports,
//! closed-loop simulation to CSV, quantizer sweeps, a hermetic built-in
//! reproduction scenario, and SVG plotting.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod csvio;
pub mod svg;

/// Successful run.
pub const EXIT_OK: i32 = 0;
/// Usage, IO, configuration, or numerical failure.
pub const EXIT_ERROR: i32 = 1;
/// The stability certificate is infeasible at the requested gain.
pub const EXIT_INFEASIBLE: i32 = 2;
/// The built-in reproduction scenario failed one of its checks.
pub const EXIT_REPRODUCTION_FAILED: i32 = 3;

/// Errors surfaced to the user by any subcommand.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Configuration file problems, one message per issue.
    #[error("invalid configuration:\n{}", .issues.join("\n"))]
    Config {
        /// One `field: problem` line per issue.
        issues: Vec<String>,
    },
    /// Filesystem access failed.
    #[error("cannot access {path}: {source}")]
    Io {
        /// The path involved.
        path: PathBuf,
        /// The underlying error.
        source: std::io::Error,
    },
    /// Graph construction or parsing failed.
    #[error("graph error: {0}")]
    Graph(#[from] edgelap::GraphError),
    /// Certificate construction failed on invalid inputs or numerics.
    #[error("certificate error: {0}")]
    Certify(edgelap::CertifyError),
    /// The certificate exists but does not certify stability.
    #[error("certificate infeasible: {reason}")]
    Infeasible {
        /// Human-readable reason.
        reason: String,
    },
    /// Simulation failed.
    #[error("simulation error: {0}")]
    Sim(#[from] edgelap::SimError),
    /// CSV reading or writing failed.
    #[error("csv error ({path}): {message}")]
    Csv {
        /// The file involved.
        path: PathBuf,
        /// What went wrong, naming the row where known.
        message: String,
    },
    /// Malformed command-line values (bad sweep lists and the like).
    #[error("invalid argument: {message}")]
    Argument {
        /// What was wrong.
        message: String,
    },
    /// One or more checks of the built-in reproduction scenario failed.
    #[error("reproduction failed: {failures} check(s) did not pass")]
    Reproduction {
        /// Number of failed checks.
        failures: usize,
    },
}

impl CliError {
    /// The process exit code this error maps to.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Infeasible { .. } => EXIT_INFEASIBLE,
            Self::Reproduction { .. } => EXIT_REPRODUCTION_FAILED,
            _ => EXIT_ERROR,
        }
    }
}

impl From<edgelap::CertifyError> for CliError {
    fn from(err: edgelap::CertifyError) -> Self {
        match err {
            edgelap::CertifyError::InfeasibleGain { .. }
            | edgelap::CertifyError::InfeasibleMargin { .. }
            | edgelap::CertifyError::InfeasibleDelta { .. } => {
                CliError::Infeasible { reason: err.to_string() }
            }
            other => CliError::Certify(other),
        }
    }
}

/// Top-level argument parser.
#[derive(Debug, Parser)]
#[command(
    name = "edgelap",
    version,
    about = "Stability certificates and closed-loop simulation for quantized consensus on digraphs"
)]
pub struct Cli {
    /// Subcommand to run.
    #[command(subcommand)]
    pub command: Command,
}

/// The available subcommands.
#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the stability certificate for a scenario and print its
    /// scalars.
    Certify {
        /// Scenario configuration file (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Also compute the time for the certified envelope to reach
        /// this radius (requires --z0-norm).
        #[arg(long)]
        target_radius: Option<f64>,
        /// Initial tree-state norm used with --target-radius.
        #[arg(long)]
        z0_norm: Option<f64>,
        /// Write the report to this file as well as stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate the closed loop and write the trajectory as CSV.
    Simulate {
        /// Scenario configuration file (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Override the configured horizon (seconds).
        #[arg(long)]
        horizon: Option<f64>,
        /// Override the configured integrator step.
        #[arg(long)]
        dt: Option<f64>,
        /// Override the configured recording stride.
        #[arg(long)]
        sample_every: Option<usize>,
        /// Override the seed of a seeded initial state.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Sweep uniform quantizer steps and compare steady-state errors
    /// against certified radii.
    Sweep {
        /// Scenario configuration file (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated uniform quantizer steps (at least two,
        /// positive, strictly increasing after sorting).
        #[arg(long)]
        deltas: String,
        /// Optional CSV output of the sweep table.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the configured horizon (seconds).
        #[arg(long)]
        horizon: Option<f64>,
        /// Override the seed of a seeded initial state.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the built-in five-node reference scenario and check its
    /// matrices, certificate scalars, and simulated bounds.
    ReproducePaper {
        /// Simulation horizon in seconds for the bound checks.
        #[arg(long, default_value_t = 60.0)]
        horizon: f64,
        /// Skip the simulations; check only matrices and certificate
        /// scalars.
        #[arg(long)]
        fast: bool,
    },
    /// Render a trajectory CSV (from `simulate`) as an SVG plot of the
    /// tree-state norm.
    Plot {
        /// Input CSV produced by `simulate`.
        csv: PathBuf,
        /// Output SVG path.
        #[arg(long)]
        out: PathBuf,
    },
}

/// Runs a parsed command line.
///
/// # Errors
///
/// Every failure mode maps onto [`CliError`]; the caller translates it
/// into an exit code via [`CliError::exit_code`].
pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Certify { config, target_radius, z0_norm, out } => {
            commands::certify::run(&config, target_radius, z0_norm, out.as_deref())
        }
        Command::Simulate { config, out, horizon, dt, sample_every, seed } => {
            commands::simulate::run(
                &config,
                &out,
                commands::simulate::Overrides { horizon, dt, sample_every, seed },
            )
        }
        Command::Sweep { config, deltas, out, horizon, seed } => {
            commands::sweep::run(&config, &deltas, out.as_deref(), horizon, seed)
        }
        Command::ReproducePaper { horizon, fast } => commands::reproduce::run(horizon, fast),
        Command::Plot { csv, out } => commands::plot::run(&csv, &out),
    }
}
