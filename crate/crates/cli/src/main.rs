use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sysnc_cli::{execute, ExperimentConfig, Flags, Mode};

/// Systematic network coding: analysis, simulation and decoder benchmarks.
#[derive(Parser)]
#[command(name = "sysnc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form decoding probabilities versus N.
    Analyze(Flags),
    /// Monte Carlo decoding probabilities versus N.
    Simulate(Flags),
    /// Transmissions needed to reach a target probability.
    Metrics(Flags),
    /// Decoder wall time versus K.
    Bench(Flags),
}

fn main() -> ExitCode {
    let (mode, flags) = match Cli::parse().command {
        Command::Analyze(f) => (Mode::Analyze, f),
        Command::Simulate(f) => (Mode::Simulate, f),
        Command::Metrics(f) => (Mode::Metrics, f),
        Command::Bench(f) => (Mode::Bench, f),
    };
    match ExperimentConfig::resolve(mode, flags).and_then(|cfg| execute(&cfg)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sysnc: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
