//! Command line front end: CSV ingestion, run configuration, JSON reports
//! and the `detect`, `simulate` and `diagnose` subcommands.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod report;

pub use error::{CliError, Result};
