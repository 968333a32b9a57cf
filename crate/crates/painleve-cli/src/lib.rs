//! Command implementations behind the `painleve` binary.
//!
//! The library split exists so integration tests can reuse the config
//! loaders and command entry points without shelling out.

pub mod commands;
pub mod config;
pub mod error;
pub mod svg;

pub use error::CliError;
