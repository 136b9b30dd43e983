//! Command-line front end: configuration, commands and output files.

use std::fmt;

use conflict_game::Error;

pub mod commands;
pub mod config;
pub mod output;

/// Why a command failed, and the exit code it maps to.
#[derive(Debug, Clone, PartialEq)]
pub enum Failure {
    /// Bad configuration or arguments.
    Config(String),
    /// Reading or writing files.
    Io(String),
    /// A solver did not produce a result.
    Numerical(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) | Failure::Io(_) => 1,
            Failure::Numerical(_) => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) | Failure::Io(m) | Failure::Numerical(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for Failure {}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParam { .. } => Failure::Config(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}
