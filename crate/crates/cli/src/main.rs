//! `ersg`: solve, evaluate and sweep entropy-regularized stochastic games.

mod commands;
mod config;
mod input;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{EvalArgs, OneShotArgs, SolveArgs, SweepArgs, ValidateArgs};

/// Exit status for malformed input or arguments.
pub const EXIT_INVALID: u8 = 2;
/// Exit status when a solver stops before reaching its tolerance.
pub const EXIT_NOT_CONVERGED: u8 = 3;
/// Exit status when strategies cannot be carried over to another map.
pub const EXIT_TRANSFER: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "ersg", version, about = "Entropy-regularized stochastic game solver")]
pub struct Cli {
    /// JSON object whose keys stand in for the subcommand's flags.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<String>,
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Add the current Unix time to JSON outputs.
    #[arg(long, global = true)]
    timestamp: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve an N-stage or discounted game.
    Solve(SolveArgs),
    /// Evaluate a strategy pair.
    Eval(EvalArgs),
    /// Run a rationality sweep over grid maps and write CSV.
    Sweep(SweepArgs),
    /// Solve one regularized matrix game.
    Oneshot(OneShotArgs),
    /// Check a game file against the game invariants.
    Validate(ValidateArgs),
}

/// An error together with the process exit status it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn invalid(error: impl Into<anyhow::Error>) -> Self {
        Self { code: EXIT_INVALID, error: error.into() }
    }
}

pub struct Globals {
    pub seed: u64,
    pub timestamp: bool,
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("ERSG_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::invalid(anyhow::anyhow!("ERSG_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(Failure::invalid)
}

fn run() -> Result<(), Failure> {
    let args = config::merge_config(std::env::args().collect()).map_err(Failure::invalid)?;
    let cli = Cli::try_parse_from(args).unwrap_or_else(|e| e.exit());
    configure_threads()?;
    let globals = Globals { seed: cli.seed, timestamp: cli.timestamp };
    match cli.command {
        Command::Solve(a) => commands::solve(&a, &globals),
        Command::Eval(a) => commands::eval(&a, &globals),
        Command::Sweep(a) => commands::sweep(&a),
        Command::Oneshot(a) => commands::oneshot(&a, &globals),
        Command::Validate(a) => commands::validate(&a),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
