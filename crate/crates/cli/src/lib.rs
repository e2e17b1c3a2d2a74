//! Command-line front end for `nonlocal-meter`.
//!
//! A run is described by a [`RunConfig`], built from a TOML file and/or flags,
//! and produces a [`RunReport`] serialized as pretty-printed JSON. Reports are
//! byte-identical for identical configs unless timing is requested.

pub mod config;
pub mod report;
pub mod run;

pub use config::{parse_config, Cli, InputSpec, Mode, RunConfig};
pub use report::RunReport;
pub use run::{execute, run};

use nonlocal_meter::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical invariant violated: {0}")]
    Numerical(String),
    #[error("impossible post-selection: {0}")]
    Impossible(String),
    #[error("cannot write output: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Impossible(_) => 4,
        }
    }

    /// Wraps a library error, prefixing `context`.
    pub fn from_core(context: &str, e: Error) -> Self {
        let msg = format!("{context}: {e}");
        match e {
            Error::ImpossibleOutcome { .. } => CliError::Impossible(msg),
            Error::LengthMismatch { .. }
            | Error::ZeroVector
            | Error::NonFinite
            | Error::AngleOutOfRange(_)
            | Error::ProbabilityOutOfRange(_)
            | Error::InvalidShots(_)
            | Error::TooFewResamples(_)
            | Error::IncompleteSettings(_)
            | Error::Csv(_) => CliError::Config(msg),
            _ => CliError::Numerical(msg),
        }
    }
}
