use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dtieval_cli::{
    cmd_compare, cmd_evaluate, cmd_simulate, cmd_validate, CliError, CompareArgs, EvaluateArgs, ScoringArgs,
    SimulateArgs, ValidateArgs,
};

/// Evaluate counter-UAS detection, tracking and identification output.
#[derive(Parser)]
#[command(name = "dtieval", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Scoring {
    /// Scoring context overriding the default anchors
    #[arg(long)]
    context: Option<PathBuf>,
    /// Metric and component weights
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Score undefined metrics as 0 instead of leaving them out
    #[arg(long)]
    treat_missing_as_zero: bool,
}

impl From<Scoring> for ScoringArgs {
    fn from(s: Scoring) -> Self {
        ScoringArgs { context: s.context, weights: s.weights, treat_missing_as_zero: s.treat_missing_as_zero }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a trial from a scenario and a DTI model
    Simulate {
        scenario: PathBuf,
        model: PathBuf,
        /// Seed; defaults to the scenario's rng_seed
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a trial directory
    Evaluate {
        trial: PathBuf,
        #[command(flatten)]
        scoring: Scoring,
        /// Emit raw metrics only
        #[arg(long)]
        no_normalize: bool,
        /// Report path; stdout if omitted
        #[arg(long)]
        out: Option<PathBuf>,
        /// Append the result to this rating store
        #[arg(long)]
        store: Option<PathBuf>,
    },
    /// Rank DTI systems from evaluation reports
    Compare {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        /// Write the table as JSON instead of printing it
        #[arg(long)]
        out: Option<PathBuf>,
        /// Rating store to append to and rank from
        #[arg(long)]
        store: Option<PathBuf>,
    },
    /// Run a validation suite
    Validate {
        suite: PathBuf,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[command(flatten)]
        scoring: Scoring,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { scenario, model, seed, out } => {
            cmd_simulate(&SimulateArgs { scenario, model, seed, out }).map(drop)
        }
        Command::Evaluate { trial, scoring, no_normalize, out, store } => {
            let report = cmd_evaluate(&EvaluateArgs { trial, scoring: scoring.into(), no_normalize, out, store })?;
            for a in &report.annotations {
                eprintln!("note: {}: {}", a.target, a.reason);
            }
            Ok(())
        }
        Command::Compare { reports, out, store } => cmd_compare(&CompareArgs { reports, out, store }).map(drop),
        Command::Validate { suite, iterations, seed, jobs, scoring, out } => {
            cmd_validate(&ValidateArgs { suite, iterations, seed, jobs, scoring: scoring.into(), out }).map(drop)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
