//! Command-line front end for `disperkit`: TOML problem configs, the
//! `trace`, `sweep`, `verify` and `compare` commands, and dataset files.

pub mod commands;
pub mod config;
pub mod dataset;
pub mod error;

pub use commands::{compare, sweep, trace, verify, Exit, GridSpec, OutputOptions};
pub use config::{LoadedConfig, ProblemConfig};
pub use error::{CliError, Result};
