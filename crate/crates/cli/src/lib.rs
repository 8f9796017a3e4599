//! Batch front end for the `spinc` binary: experiment configs, sweep
//! execution, report aggregation and plots.

pub mod config;
pub mod plot;
pub mod run;

pub use config::{ConfigError, ExperimentConfig};
pub use run::{Outputs, RunParams};
