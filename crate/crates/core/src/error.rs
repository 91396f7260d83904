use thiserror::Error;

/// Errors raised by argument checks across the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ZibError {
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    /// A bound was requested outside the sample-size regime where its coverage holds.
    #[error("validity condition unmet: n = {n} is below the required {required}")]
    ValidityUnmet { n: u64, required: u64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid configuration: {field}: {reason}")]
    Config { field: String, reason: String },

    /// Malformed configuration text; positions are 1-based.
    #[error("line {line}, column {column}: {reason}")]
    Parse { line: usize, column: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, ZibError>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> ZibError {
    ZibError::InvalidArgument {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn config_err(field: impl Into<String>, reason: impl Into<String>) -> ZibError {
    ZibError::Config {
        field: field.into(),
        reason: reason.into(),
    }
}
