//! Library half of the `crb` command: argument grammar, input files, the
//! report model and the command runners. `main.rs` only maps outcomes to
//! exit codes.

pub mod args;
pub mod config;
pub mod report;
pub mod run;

use crb_core::CrbError;

pub use args::{Cli, Command};
pub use report::{Quantity, Report, Value};
pub use run::{execute, Outcome};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;
pub const EXIT_VIOLATES: u8 = 4;

#[derive(Debug)]
pub enum CliError {
    /// Bad files, flags or block names.
    Config(String),
    /// A quantity that should be positive definite, full rank or convergent was not.
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<CrbError> for CliError {
    fn from(e: CrbError) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}
