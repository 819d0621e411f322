//! Experiment driver for `kuramoto-graphon`: JSON configs, the `kgraphon`
//! command line, atomic result files and run manifests.

pub mod commands;
pub mod config;
pub mod experiments;
pub mod output;

pub use commands::{execute, run, Cli, Outcome};
pub use config::{ConfigError, Experiment, ExperimentConfig};
