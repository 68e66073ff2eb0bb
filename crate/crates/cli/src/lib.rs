//! Command-line front end of the `confpred` harness: dataset generation,
//! experiment runs, reports and SVG plots.

pub mod commands;
pub mod config;
pub mod error;
pub mod plot;
pub mod report;

pub use commands::{cmd_plot, cmd_report, cmd_run, cmd_synth, RunOutputs};
pub use config::ExperimentConfig;
pub use error::CliError;
