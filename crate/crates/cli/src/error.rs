use std::fmt;

use thiserror::Error;

/// Failure of one subcommand. Usage errors exit with 2, everything else
/// with 1.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad or missing arguments; printed together with the usage line.
    #[error("{message}")]
    Usage { message: String },
    /// The command was well formed but failed while running.
    #[error("{kind}: {message}")]
    Runtime { kind: String, message: String },
}

impl CliError {
    pub fn usage(message: impl fmt::Display) -> Self {
        CliError::Usage {
            message: message.to_string(),
        }
    }

    /// Wraps a library error. Messages of the form `Kind: detail` keep
    /// their kind; others are filed under `fallback`.
    pub fn runtime(fallback: &str, err: impl fmt::Display) -> Self {
        let text = err.to_string();
        if let Some((head, rest)) = text.split_once(": ") {
            let is_kind = head.chars().next().is_some_and(|c| c.is_ascii_uppercase())
                && head.chars().all(|c| c.is_ascii_alphanumeric());
            if is_kind {
                return CliError::Runtime {
                    kind: head.to_string(),
                    message: rest.to_string(),
                };
            }
        }
        CliError::Runtime {
            kind: fallback.to_string(),
            message: text,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage { .. } => 2,
            CliError::Runtime { .. } => 1,
        }
    }
}

/// Shorthand for mapping library results into runtime errors.
pub trait Context<T> {
    fn or_kind(self, kind: &str) -> Result<T, CliError>;
}

impl<T, E: fmt::Display> Context<T> for Result<T, E> {
    fn or_kind(self, kind: &str) -> Result<T, CliError> {
        self.map_err(|e| CliError::runtime(kind, e))
    }
}
