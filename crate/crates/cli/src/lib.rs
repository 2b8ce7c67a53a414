//! Library half of the `forged-eeg` binary: argument parsing, configuration,
//! and command implementations, exposed so integration tests can drive the
//! commands in-process.

pub mod args;
pub mod commands;
pub mod config;

pub use args::{parse_args, Command};
pub use commands::run_command;
pub use config::AppConfig;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AppError {
    #[error("unknown command {name:?}")]
    UnknownCommand { name: String },
    #[error("unrecognized flag {token:?}")]
    BadFlag { token: String },
    #[error("configuration: {reason}")]
    Config { reason: String },
    /// Help or version output; not a failure.
    #[error("{message}")]
    Exit { message: String, code: i32 },
}
