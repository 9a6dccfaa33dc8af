use std::fmt;
use std::process::ExitCode;

/// A failed run: the caller's fault (bad input, bad config) or ours.
#[derive(Debug)]
pub enum CliError {
    User(String),
    Internal(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn user(msg: impl Into<String>) -> Self {
        CliError::User(msg.into())
    }

    pub fn internal(msg: impl Into<String>) -> Self {
        CliError::Internal(msg.into())
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::User(_) => ExitCode::from(1),
            CliError::Internal(_) => ExitCode::from(2),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::User(m) => write!(f, "error: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

// Every library error describes a problem with the inputs or the requested
// analysis; none of them signals a bug.
impl From<disrupt_core::Error> for CliError {
    fn from(e: disrupt_core::Error) -> Self {
        CliError::User(e.to_string())
    }
}

/// Attaches the path being written to an I/O failure.
pub fn io_error(path: &std::path::Path, e: std::io::Error) -> CliError {
    CliError::user(format!("{}: {e}", path.display()))
}
