//! Driver for the `sysnc` command: configuration, the four subcommands and
//! their CSV output.

pub mod commands;
pub mod config;

use std::io::Write;

use sysnc::analysis::AnalysisError;
use sysnc::simulator::SimError;
use thiserror::Error;

pub use config::{ExperimentConfig, Flags, Mode};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Invariant(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Invariant(_) => CliError::Invariant(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Codec(_) => CliError::Invariant(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

/// The CSV text for a validated config.
pub fn render(cfg: &ExperimentConfig) -> Result<String, CliError> {
    let job = || match cfg.mode()? {
        Mode::Analyze => commands::analyze(cfg),
        Mode::Simulate => commands::simulate(cfg),
        Mode::Metrics => commands::metrics(cfg),
        Mode::Bench => commands::bench(cfg),
    };
    match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?
            .install(job),
        None => job(),
    }
}

/// Renders and writes to the configured output, or stdout.
pub fn execute(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let csv = render(cfg)?;
    match &cfg.out {
        Some(path) => std::fs::write(path, csv)?,
        None => std::io::stdout().lock().write_all(csv.as_bytes())?,
    }
    Ok(())
}
