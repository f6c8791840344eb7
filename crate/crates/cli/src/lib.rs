//! Command-line front end: scenario files, result tables, plots.

pub mod commands;
pub mod config;
pub mod svg;
pub mod table;

use config::ConfigError;

/// Exit status for a failed run: 2 when the scenario or arguments are at
/// fault, 1 for everything the model itself rejects.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    if err.chain().any(|e| e.is::<ConfigError>()) {
        2
    } else {
        1
    }
}
