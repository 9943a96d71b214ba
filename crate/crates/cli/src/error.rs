use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// A JSON syntax or schema error at `line:column`.
    #[error("{line}:{column}: {message}")]
    Json {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error("{path}: {inner}")]
    In { path: String, inner: Box<CliError> },

    #[error(transparent)]
    Core(#[from] dvqe::Error),
}

impl CliError {
    pub fn json(e: serde_json::Error) -> Self {
        CliError::Json {
            line: e.line(),
            column: e.column(),
            message: e
                .to_string()
                .split(" at line ")
                .next()
                .unwrap_or_default()
                .to_string(),
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// Prefixes the message with the file it came from.
    pub fn at(self, path: &Path) -> Self {
        CliError::In {
            path: path.display().to_string(),
            inner: Box::new(self),
        }
    }
}
