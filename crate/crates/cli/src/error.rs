use std::path::Path;

use serde_json::json;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error("{context}: {source}")]
    Solver {
        context: String,
        source: mechpattern::Error,
    },

    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver { .. } => 3,
            CliError::Io { .. } => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Solver { .. } => "solver",
            CliError::Io { .. } => "io",
        }
    }

    pub fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }

    /// Machine-readable form written to stderr.
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "error": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        })
    }
}

/// Attaches context to core errors; configuration errors keep exit code 2.
pub trait Context<T> {
    fn context(self, what: &str) -> Result<T, CliError>;
}

impl<T> Context<T> for mechpattern::Result<T> {
    fn context(self, what: &str) -> Result<T, CliError> {
        self.map_err(|e| match e {
            mechpattern::Error::Config(msg) => CliError::Config(format!("{what}: {msg}")),
            other => CliError::Solver {
                context: what.to_string(),
                source: other,
            },
        })
    }
}
