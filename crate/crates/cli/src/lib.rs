//! Command-line front end for the aligner: corpus scoring, CRF training and
//! decoding, evaluation, threshold tuning, synthetic data, and the annotation
//! HTTP service.

mod args;
mod commands;
pub mod service;

use std::fmt;

pub use args::{Cli, Command};
pub use commands::run;

/// Failure with the process exit code it maps to.
#[derive(Debug)]
pub enum CliError {
    /// Bad or missing arguments (exit 2).
    Usage(String),
    /// Unreadable, malformed or inconsistent input (exit 3).
    Data(simalign::Error),
    /// Missing or corrupt model checkpoint (exit 4).
    Model(simalign::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Model(_) => 4,
        }
    }
}

impl From<simalign::Error> for CliError {
    fn from(err: simalign::Error) -> Self {
        if err.is_model_error() {
            CliError::Model(err)
        } else {
            CliError::Data(err)
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Data(err) => write!(f, "{err}"),
            CliError::Model(err) => write!(f, "{err}"),
        }
    }
}

impl std::error::Error for CliError {}
