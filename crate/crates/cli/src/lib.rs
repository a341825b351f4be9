//! Command-line front end for stability-lab: reads a scenario file, runs the
//! requested certification or experiment and writes CSV and JSON reports.

pub mod commands;
pub mod error;
pub mod format;
pub mod scenario;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{evaluate, write_artifacts, Artifact, Command, Outcome, Overrides};
pub use error::{CliError, CliResult};
pub use scenario::Scenario;

pub const THREADS_VAR: &str = "STABILITY_LAB_THREADS";

#[derive(Debug, Parser)]
#[command(name = "stability-lab", version, about = "Exact stability certification and generalization experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Run a certify, implication or separation scenario.
    Certify(RunArgs),
    /// Run a compose or monitor scenario.
    Experiment(RunArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Maximum number of enumerated sample tuples.
    #[arg(long)]
    pub budget: Option<u128>,
    /// Comma-separated ε values; overrides the scenario grid.
    #[arg(long)]
    pub grid: Option<String>,
}

/// Builds the global thread pool from `STABILITY_LAB_THREADS` when set.
pub fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::Environment(format!("{THREADS_VAR}=`{raw}` is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Environment(e.to_string()))
}

/// Validates and evaluates first, then writes every report.
pub fn run(cli: Cli) -> CliResult<Outcome> {
    let (command, args) = match cli.command {
        CliCommand::Certify(a) => (Command::Certify, a),
        CliCommand::Experiment(a) => (Command::Experiment, a),
    };
    let grid = args.grid.as_deref().map(scenario::parse_grid).transpose()?;
    let scenario = Scenario::load(&args.scenario)?;
    let overrides = Overrides {
        seed: args.seed,
        budget: args.budget,
        grid,
    };
    let outcome = evaluate(command, &scenario, &overrides)?;
    write_artifacts(&args.out, &outcome.artifacts)?;
    Ok(outcome)
}
