//! File formats, parallel sweeps and subcommands for the `ppacdc` binary.

pub mod commands;
pub mod edgelist;
pub mod error;
pub mod experiment;
pub mod output;
pub mod parallel;
pub mod presets;

pub use error::{CliError, Result};
pub use experiment::{Experiment, ExperimentFile};
