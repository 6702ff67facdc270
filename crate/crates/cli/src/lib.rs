//! Command implementations behind the `dabsig` binary.
//!
//! Every command reads one TOML config, writes its data to a file through a
//! temp-file-and-rename, and reports diagnostics on stderr. Exit codes:
//! `0` success, `1` failed check or other error, `2` config error,
//! `3` marginal system, `4` oracle non-convergence, `5` injection amplitude
//! violation.

pub mod commands;
pub mod config;
pub mod output;

use std::fmt;

pub use config::ConfigFile;

pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_MARGINAL: i32 = 3;
pub const EXIT_CONVERGENCE: i32 = 4;
pub const EXIT_AMPLITUDE: i32 = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(EXIT_CONFIG, message)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<dabsig::Error> for CliError {
    fn from(e: dabsig::Error) -> Self {
        use dabsig::Error as E;
        let code = match &e {
            E::Config(_) | E::Parameter(_) => EXIT_CONFIG,
            E::Marginal { .. } => EXIT_MARGINAL,
            E::Convergence { .. } => EXIT_CONVERGENCE,
            E::Amplitude(_) => EXIT_AMPLITUDE,
            _ => EXIT_FAILURE,
        };
        Self::new(code, e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::new(EXIT_FAILURE, e.to_string())
    }
}
