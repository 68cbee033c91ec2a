//! Batch front end: reads an experiment config, runs one command, and writes
//! CSV fields plus a `key=value` report into the output directory.
//!
//! Exit codes: 0 success, 2 config error, 3 solver divergence (or an
//! optimizer that stopped without converging), 4 validation failure.

// `!(x >= 0.0)` rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod diff;
pub mod expr;
mod commands;

use std::path::PathBuf;

pub use config::{Command, ConfigError, ExperimentConfig};
pub use diff::diff_artifacts;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Success = 0,
    Config = 2,
    Divergence = 3,
    Validation = 4,
}

impl ExitCode {
    pub fn code(self) -> i32 {
        self as i32
    }
}

/// A run that could not complete.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub code: ExitCode,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Self { code: ExitCode::Config, message: message.into() }
    }

    /// Maps a library error raised during `stage` to its exit code.
    pub fn from_core(stage: &str, err: semicontrol::Error) -> Self {
        use semicontrol::Error as E;
        let code = match err {
            E::Argument(_) | E::Shape { .. } | E::Parse { .. } => ExitCode::Config,
            E::Divergence { .. } | E::LinearSolve(_) => ExitCode::Divergence,
            E::Validation(_) => ExitCode::Validation,
        };
        Self { code, message: format!("{stage}: {err}") }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::config(e.0)
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Failure {}

/// A completed run. `code` may still be nonzero when artifacts were written
/// but a check failed (unconverged optimizer, failed verification).
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: ExitCode,
    pub files: Vec<PathBuf>,
    pub summary: String,
}

/// Reads `SEMICONTROL_THREADS`; unset or empty means no cap.
pub fn thread_cap_from_env() -> Result<Option<usize>, Failure> {
    match std::env::var("SEMICONTROL_THREADS") {
        Err(_) => Ok(None),
        Ok(v) if v.trim().is_empty() => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Failure::config(format!("SEMICONTROL_THREADS: '{v}' is not a positive integer"))),
        },
    }
}

/// Runs `command` (or the config's `[run] command`).
pub fn run(config: &ExperimentConfig, command: Option<Command>, threads: Option<usize>) -> Result<Outcome, Failure> {
    let command = command
        .or(config.run.command)
        .ok_or_else(|| Failure::config("[run] command: no command given on the command line or in the config"))?;
    commands::dispatch(config, command, threads)
}
