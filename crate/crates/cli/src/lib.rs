//! File formats, reports and the command-line front end for `mdchase-core`.

pub mod commands;
pub mod gen;
pub mod io;
pub mod runner;

pub use commands::{render, run, Cli, CliError, Command, Format, Outcome, Report, RunConfig};
