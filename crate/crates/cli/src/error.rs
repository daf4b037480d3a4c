use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed or invalid input, located by a JSON pointer or flag name.
    #[error("{location}: {message}")]
    Schema { location: String, message: String },
    #[error(transparent)]
    Core(#[from] scalecalc::Error),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    pub fn schema(location: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Schema {
            location: location.into(),
            message: message.into(),
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// Errors are input the user must fix; failed invariants exit with 1
    /// through the normal path.
    pub fn exit_code(&self) -> u8 {
        2
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
