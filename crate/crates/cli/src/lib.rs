//! Batch driver for the reduced coupled models in `cbmor-core`: scenario files, runs,
//! sampling, POD and run comparison.

pub mod commands;
pub mod config;
pub mod error;
pub mod modes;
pub mod persist;
pub mod report;

pub use error::{CliError, CliResult};
