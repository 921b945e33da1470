use std::path::PathBuf;

use thiserror::Error;

pub const EXIT_PARSE: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_RUNTIME: i32 = 4;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("{module}::{operation} failed: {message}")]
    Runtime { module: &'static str, operation: &'static str, message: String },
    #[error("cannot write {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => EXIT_PARSE,
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Runtime { .. } | CliError::Io { .. } => EXIT_RUNTIME,
        }
    }

    pub fn validation(context: &str, err: impl std::fmt::Display) -> Self {
        CliError::Validation(format!("{context}: {err}"))
    }
}

/// Wraps an operation error with the module and operation that raised it.
pub fn runtime<E: std::fmt::Display>(module: &'static str, operation: &'static str) -> impl FnOnce(E) -> CliError {
    move |e| CliError::Runtime { module, operation, message: e.to_string() }
}
