//! Batch front end for the `deficiency` crate.
//!
//! Every command reads a TOML [`config::RunConfig`], runs one computation
//! and produces a [`report::Report`]. The binary prints a short summary (or
//! the JSON itself with `--json`) and writes the JSON to `--out` when given.
//!
//! Exit codes: 0 success, 1 input or I/O error, 2 model rejected, 3 no
//! self-adjoint extension, 4 certificate or numerical failure.

pub mod commands;
pub mod config;
pub mod report;

use deficiency::Error;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] Error),

    /// The computation ran but at least one check failed; the report has
    /// already been written.
    #[error("checks failed: {0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } | CliError::Config(_) => 1,
            CliError::Failed(_) => 4,
            CliError::Core(e) => match e {
                Error::ModelRejected { .. } => 2,
                Error::NoSelfAdjointExtension { .. } => 3,
                Error::Io { .. }
                | Error::Parse { .. }
                | Error::InvalidPreset(_)
                | Error::InvalidSpace(_)
                | Error::InvalidTolerance { .. }
                | Error::InconsistentConstraints(_)
                | Error::NotUnitary { .. }
                | Error::DimensionMismatch { .. }
                | Error::UnsupportedParameter { .. }
                | Error::Empty(_)
                | Error::NonFinite => 1,
                Error::NotOrthonormal { .. }
                | Error::DegenerateSum { .. }
                | Error::NumericalFailure(_)
                | Error::ToleranceInconsistency { .. }
                | Error::CertificateFailed(_) => 4,
            },
        }
    }
}
