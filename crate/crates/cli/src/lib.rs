//! Experiment driver for `mems-core`: JSON configs in, CSV tables and JSON
//! metadata out.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;

pub use config::{parse_config, parse_config_str, ExperimentConfig, InitialCondition, Kind};
pub use error::{CliError, CliResult};
pub use experiments::{run_experiment, Report, RunOptions};
