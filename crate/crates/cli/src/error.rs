use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("{module}: {message}")]
    Compute { module: &'static str, message: String },
    #[error("digest mismatch for {path}: manifest has {expected}, file has {actual}")]
    DigestMismatch { path: PathBuf, expected: String, actual: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            _ => 1,
        }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}

/// Tags an error from a core module with the module name.
pub fn compute<E: std::fmt::Display>(module: &'static str) -> impl Fn(E) -> CliError {
    move |e| CliError::Compute { module, message: e.to_string() }
}
