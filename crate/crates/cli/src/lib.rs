//! Command-line front end for `mfde-tau-core`: problem files, solve and
//! sweep reports in JSON and CSV, and SVG plots.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod report;
pub mod svg;

pub use args::Cli;
pub use commands::{cmd_plot, cmd_solve, cmd_sweep, run};
pub use config::{DegreeSpec, ProblemFile, ProblemSource, RunConfig};
pub use error::CliError;
