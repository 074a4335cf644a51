use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] tsgraph::Error),

    #[error("cli: {}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("cli: {}: {message}", path.display())]
    Parse { path: PathBuf, message: String },

    #[error("cli: invalid input: {0}")]
    Input(String),

    #[error("cli: invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn parse(path: &Path, message: impl Into<String>) -> Self {
        CliError::Parse {
            path: path.to_path_buf(),
            message: message.into(),
        }
    }

    /// Process exit status: 2 input, 3 numerical, 4 configuration.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numerical() => 3,
            CliError::Core(e) if e.is_config() => 4,
            CliError::Config(_) => 4,
            _ => 2,
        }
    }
}
