//! Command-line front end for the `qfi-bandlimit` library: value-range
//! parsing, TOML configuration, parallel sweeps, and CSV/JSON output.

pub mod cli;
pub mod commands;
pub mod config;
pub mod output;
pub mod range;
pub mod sweep;

use thiserror::Error;

pub const THREADS_ENV: &str = "QFI_BANDLIMIT_THREADS";

/// Problems with the invocation itself, reported with exit status 1.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum UsageError {
    #[error("invalid `{field}`: {reason}")]
    Field { field: &'static str, reason: String },
    #[error("config: {0}")]
    Config(String),
}

impl UsageError {
    pub fn field(field: &'static str, reason: impl Into<String>) -> Self {
        Self::Field {
            field,
            reason: reason.into(),
        }
    }
}
