use thiserror::Error;

pub type Result<T> = std::result::Result<T, QrmError>;

#[derive(Debug, Error)]
pub enum QrmError {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    Dimension {
        context: &'static str,
        expected: String,
        actual: String,
    },

    /// The denominator H vanished at an iterate, so the subgradient q and
    /// the weight 1/H(u) are undefined.
    #[error("degenerate iterate: H(u) = 0")]
    DegenerateIterate,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl QrmError {
    pub(crate) fn dimension(
        context: &'static str,
        expected: impl ToString,
        actual: impl ToString,
    ) -> Self {
        QrmError::Dimension {
            context,
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        QrmError::InvalidArgument(msg.into())
    }
}
