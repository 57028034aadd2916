use std::fmt;
use std::io;
use std::path::PathBuf;

/// Failure of a command-line run. Every variant maps to one exit code and
/// renders as a single line starting with `error[<tag>]`.
#[derive(Debug)]
pub enum CliError {
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    Invalid {
        field: &'static str,
        reason: String,
    },
    Io {
        path: PathBuf,
        source: io::Error,
    },
    Csv {
        path: PathBuf,
        message: String,
    },
    Solver {
        stage: &'static str,
        source: mems_core::Error,
    },
    Touchdown {
        stage: &'static str,
        time: f64,
    },
    Validation {
        failed: usize,
        total: usize,
    },
}

impl CliError {
    pub fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        CliError::Invalid {
            field,
            reason: reason.into(),
        }
    }

    pub fn solver(stage: &'static str) -> impl FnOnce(mems_core::Error) -> Self {
        move |source| CliError::Solver { stage, source }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse { .. } | CliError::Invalid { .. } => 2,
            CliError::Io { .. } | CliError::Csv { .. } | CliError::Solver { .. } | CliError::Validation { .. } => 3,
            CliError::Touchdown { .. } => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Parse {
                path,
                line,
                column,
                message,
            } => {
                write!(f, "error[config]: {}:{line}:{column}: {message}", path.display())
            }
            CliError::Invalid { field, reason } => write!(f, "error[config]: field `{field}`: {reason}"),
            CliError::Io { path, source } => write!(f, "error[io]: {}: {source}", path.display()),
            CliError::Csv { path, message } => write!(f, "error[io]: {}: {message}", path.display()),
            CliError::Solver { stage, source } => write!(f, "error[solver:{stage}]: {source}"),
            CliError::Touchdown { stage, time } => {
                write!(
                    f,
                    "error[touchdown:{stage}]: membrane touched down at t = {time} before the horizon"
                )
            }
            CliError::Validation { failed, total } => {
                write!(f, "error[validate]: {failed} of {total} checks failed")
            }
        }
    }
}

impl std::error::Error for CliError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            CliError::Io { source, .. } => Some(source),
            CliError::Solver { source, .. } => Some(source),
            _ => None,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
