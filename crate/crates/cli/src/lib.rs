//! Library backing the `qdense` binary; the command implementations live here
//! so the verification and integration suites can drive them directly.

pub mod commands;
pub mod config;
pub mod verify;

/// Process exit codes: 1 usage, 2 numerical failure, 3 acceptance failure.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }

    pub fn numerical(err: impl std::fmt::Display) -> Self {
        Self {
            code: 2,
            message: err.to_string(),
        }
    }

    pub fn acceptance(message: impl Into<String>) -> Self {
        Self {
            code: 3,
            message: message.into(),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl std::error::Error for CliError {}
