use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: line {line}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("scenario field `{field}`: {message}")]
    Field { field: String, message: String },

    #[error("invalid environment: {0}")]
    Environment(String),

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Core(#[from] stability_lab::Error),
}

impl CliError {
    pub fn field(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Field {
            field: field.into(),
            message: message.into(),
        }
    }

    /// 0 ok, 1 input error, 2 budget exceeded, 3 internal invariant violation.
    pub fn exit_code(&self) -> i32 {
        use stability_lab::Error as E;
        match self {
            CliError::Core(E::BudgetExceeded { .. }) => 2,
            CliError::Core(E::UndefinedAverage) | CliError::Invariant(_) => 3,
            _ => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
