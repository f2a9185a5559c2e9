use thiserror::Error;

/// Errors raised by the model, analysis and simulation layers.
#[derive(Debug, Error)]
pub enum Error {
    /// An input lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A parameter violates a construction-time bound.
    #[error("validation error: parameter `{param}` must satisfy {bound} (got {value:?})")]
    Validation {
        param: &'static str,
        bound: &'static str,
        value: f64,
    },

    /// The operation was called outside the regime it is defined for.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A numerical procedure failed to converge or to bracket a root.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Two independent routes to the same answer disagree.
    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),
}

pub type Result<T> = std::result::Result<T, Error>;
