//! Experiment driver: config parsing, data ingestion and table emission for
//! the Chebyshev particle experiments.

pub mod config;
pub mod experiments;

pub use config::{Experiment, ExperimentConfig};
pub use experiments::{run, Report};
