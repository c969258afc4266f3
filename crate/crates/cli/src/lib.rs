//! Command-line front end: argument and config parsing, CSV output and
//! run manifests.

pub mod angle;
pub mod args;
pub mod commands;
pub mod config;
pub mod output;

pub use commands::{run_command, Command, RunManifest};
pub use config::Params;
