//! Command line driver for `fracsob-core`: field I/O, configuration, the
//! acceptance suite and its reports.

pub mod config;
pub mod error;
pub mod io;
pub mod report;
pub mod scenarios;
pub mod suite;

pub use config::Config;
pub use error::{CliError, Result};
