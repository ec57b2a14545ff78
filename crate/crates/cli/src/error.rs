use std::fmt;

use rwce::mc::McError;

use crate::config::ConfigError;

/// Failure classes with their process exit codes.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
    BoundViolation(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
            CliError::BoundViolation(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Runtime(m) => write!(f, "runtime error: {m}"),
            CliError::BoundViolation(m) => write!(f, "bound violation: {m}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.0)
    }
}

impl From<McError> for CliError {
    fn from(e: McError) -> Self {
        match e {
            // the configured scenario cannot be checked as asked
            McError::Env(_) | McError::Tree(_) | McError::HypothesisMismatch { .. } | McError::OverlappingSets | McError::NoTrials => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Runtime(e.to_string()),
        }
    }
}
