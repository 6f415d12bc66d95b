use thiserror::Error;

/// Errors shared by the numerical layers.
#[derive(Debug, Error)]
pub enum CoreError {
    /// A precondition on the arguments failed.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The input is degenerate (e.g. an all-zero field cannot be normalized).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// Two fields that must share a grid do not.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
