//! Experiment harness around `eprnet-core`: JSON configs, a parallel grid
//! runner, CSV/JSON result files and SVG plots.

pub mod config;
pub mod output;
pub mod plot;
pub mod runner;

pub use config::{ConfigError, ExperimentConfig, Sources, TopologySource};
pub use runner::{run, workers_from_env, Outcome, RunError, Status};
