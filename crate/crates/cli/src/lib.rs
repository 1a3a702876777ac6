//! Experiment harness: TOML configs, parallel trials and result files.

pub mod config;
pub mod error;
pub mod experiment;

pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};
