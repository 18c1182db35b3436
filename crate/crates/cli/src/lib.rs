//! Command-line driver: dataset synthesis, model construction, evaluation,
//! class activation maps and kernel pruning.

pub mod commands;
pub mod config;
pub mod error;
pub mod pipeline;

pub use config::RunConfig;
pub use error::{CliError, CliResult};
