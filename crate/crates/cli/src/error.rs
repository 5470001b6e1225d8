use std::path::PathBuf;

use clearnet_core::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{source_name}: line {line}, column {column}, field `{field}`: {message}")]
    Parse {
        source_name: String,
        line: usize,
        column: usize,
        field: String,
        message: String,
    },

    #[error("invalid scenario: {0}")]
    Validation(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("methods disagree: {0}")]
    Disagreement(String),
}

impl CliError {
    /// 0 success, 2 validation failure, 3 solver precondition failure,
    /// 4 internal assertion.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Read { .. }
            | CliError::Parse { .. }
            | CliError::Validation(_)
            | CliError::Argument(_) => 2,
            CliError::Write { .. } => 4,
            CliError::Core(e) if e.is_validation() => 2,
            CliError::Core(CoreError::Internal(_)) => 4,
            CliError::Core(_) => 3,
            CliError::Disagreement(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
