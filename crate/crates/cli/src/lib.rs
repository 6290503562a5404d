//! Experiment runner: reads a TOML config, runs one experiment and writes
//! its report, series, snapshots and manifest.

pub mod app;
pub mod config;
pub mod error;
pub mod experiments;
pub mod output;

pub use app::{resolve_output_dir, run, validate, RunOptions, RunSummary, Validation, EXIT_ERROR, OUTPUT_ROOT_ENV};
pub use config::{Analysis, Buoyancy, Experiment, ExperimentConfig};
pub use error::CliError;
pub use experiments::Status;
