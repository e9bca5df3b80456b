//! File formats, run manifests and subcommands of the `saatrace` tool.
//!
//! Matrices are read and written as Matrix Market, vectors as one decimal
//! per line, finite spaces and trial logs as CSV, sample banks in the binary
//! RBNK layout and every report as JSON with a versioned `schema` field.

pub mod bank;
pub mod cli;
pub mod commands;
pub mod config;
mod error;
pub mod mtx;
pub mod report;
pub mod tables;

pub use error::FormatError;
