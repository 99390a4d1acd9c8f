//! File formats and the command-line front end for `gqa-core`.

pub mod commands;
pub mod json;
pub mod table;

pub use commands::{run, CliError, Command, Options, Outcome};
