pub mod commands;
pub mod config;
pub mod data;
pub mod draws;
pub mod error;
pub mod io;

use clap::{Parser, Subcommand};

use commands::{FitArgs, Outcome, ScoreArgs, SimulateArgs, TransformArgs};
use error::{CliError, CliResult};

#[derive(Parser, Debug)]
#[command(name = "statvar", version, about = "Stationary Bayesian vector autoregressions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sample the posterior and write a draws file.
    Fit(FitArgs),
    /// Simulate a series from an explicit model or a prior draw.
    Simulate(SimulateArgs),
    /// Score held-back points for the fitted prior and configured baselines.
    Score(ScoreArgs),
    /// Apply one of the parameter maps to matrices in a CSV.
    Transform(TransformArgs),
}

pub const THREADS_VAR: &str = "STATVAR_THREADS";

/// Caps the global rayon pool at `STATVAR_THREADS` when it is set.
pub fn init_threads() -> CliResult<()> {
    let Ok(value) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("{THREADS_VAR} must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("{THREADS_VAR}: {e}")))
}

pub fn run(cli: &Cli) -> CliResult<Outcome> {
    init_threads()?;
    match &cli.command {
        Command::Fit(a) => commands::cmd_fit(a),
        Command::Simulate(a) => commands::cmd_simulate(a),
        Command::Score(a) => commands::cmd_score(a),
        Command::Transform(a) => commands::cmd_transform(a),
    }
}
