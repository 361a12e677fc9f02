// SPDX-License-Identifier: MIT OR Apache-2.0

//! Front end of `hypvol-core`: TOML spec files, reproducible CSV and JSON
//! outputs, the acceptance checks and the `hypvol` command line.
//!
//! Exit codes: 0 when the run and its numerical check succeed, 1 when a
//! check fails or a solver gives up, 2 for usage, parse and I/O errors.

#![forbid(unsafe_code)]
#![warn(missing_docs)]

pub mod checks;
pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use error::{CliError, EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE};
