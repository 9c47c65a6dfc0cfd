//! Configuration, orchestration and CSV output behind the `chaintrunc` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::{execute, run, Command, Report};
pub use config::{Overrides, RunConfig};
pub use error::CliError;
