//! Config files, output formats and commands for differentially private
//! LQG experiments built on `dplqg-core`.

pub mod commands;
pub mod config;
pub mod error;
pub mod formats;

pub use config::ExperimentConfig;
pub use error::CliError;
