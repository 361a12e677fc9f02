// SPDX-License-Identifier: MIT OR Apache-2.0

//! Errors of the front end and their process exit codes.

use std::path::PathBuf;

/// Exit code for success.
pub const EXIT_OK: u8 = 0;
/// Exit code for a failed numerical check or a solver failure.
pub const EXIT_NUMERICAL: u8 = 1;
/// Exit code for usage, parse and I/O errors.
pub const EXIT_USAGE: u8 = 2;

/// Anything that stops a subcommand.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags or an invalid configuration.
    #[error("usage error: {0}")]
    Usage(String),
    /// The spec file could not be parsed.
    #[error("{path}: {message}")]
    Parse {
        /// Spec file.
        path: PathBuf,
        /// Parser message, including line and column when known.
        message: String,
    },
    /// Reading or writing a file failed.
    #[error("{path}: {source}")]
    Io {
        /// File involved.
        path: PathBuf,
        /// Underlying error.
        source: std::io::Error,
    },
    /// A library routine failed.
    #[error("{0}")]
    Numerical(#[from] hypvol_core::Error),
}

impl CliError {
    /// Process exit code for this error.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Numerical(_) => EXIT_NUMERICAL,
            CliError::Usage(_) | CliError::Parse { .. } | CliError::Io { .. } => EXIT_USAGE,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }
}

/// Result alias for the front end.
pub type Result<T> = std::result::Result<T, CliError>;
