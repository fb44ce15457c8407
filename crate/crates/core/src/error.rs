use std::path::PathBuf;

/// Errors raised by the simulator. Each variant names the operation or field
/// that failed so the CLI can map it onto an exit code.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}", describe_field(field, message))]
    InvalidParameter { field: String, message: String },

    #[error("resolution check failed: {0}")]
    Resolution(String),

    #[error("non-finite value in {operation} at step {step}")]
    NonFinite { operation: &'static str, step: usize },

    #[error("{0}: input has zero energy")]
    ZeroEnergy(&'static str),

    #[error("{operation} did not converge after {iterations} iterations (best estimate {best}, residual {residual})")]
    NoConvergence {
        operation: &'static str,
        iterations: usize,
        best: f64,
        residual: f64,
    },

    #[error("{operation}: {message}")]
    Numerical {
        operation: &'static str,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

fn describe_field(field: &str, message: &str) -> String {
    if message.starts_with("must") {
        format!("{field} {message}")
    } else {
        format!("{field}: {message}")
    }
}

impl Error {
    pub fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn numerical(operation: &'static str, message: impl Into<String>) -> Self {
        Error::Numerical {
            operation,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad input rather than by the numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. }
                | Error::Resolution(_)
                | Error::Io { .. }
                | Error::Parse { .. }
                | Error::Json(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
