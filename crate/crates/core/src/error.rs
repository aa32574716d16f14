use thiserror::Error;

/// Errors reported by `ubqp-core`.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed instance or artifact text. `line` is 1-based.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Arguments that violate an operation's preconditions.
    #[error("invalid input: {0}")]
    Input(String),

    /// The operation is not applicable in the current state.
    #[error("invalid state: {0}")]
    State(String),

    /// A coefficient lies outside the interval spanned by the generators.
    #[error("out of range: {0}")]
    Range(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn input<T>(message: impl Into<String>) -> Result<T> {
    Err(Error::Input(message.into()))
}
