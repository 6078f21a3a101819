//! Experiment runner behind the `evoctrl` binary.

pub mod config;
pub mod runner;

pub use config::{Command, ExperimentConfig};
pub use runner::{execute, run, Outcome, EXIT_CONFIG, EXIT_FAIL, EXIT_PASS};
