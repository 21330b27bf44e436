//! Experiment runner: JSON configs in, CSV files and a JSON report out.

pub mod config;
pub mod error;
pub mod experiments;
pub mod presets;
pub mod run;

pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};
pub use run::{run, RunReport};
