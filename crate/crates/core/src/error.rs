use thiserror::Error;

/// Failure modes shared by every numerical routine in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum KacError {
    /// An argument lies outside the mathematical domain of the routine.
    #[error("domain error: {0}")]
    Domain(String),
    /// Evaluation requested exactly at a singular point.
    #[error("singularity: {0}")]
    Singularity(String),
    /// The requested tolerance could not be met with the configured budget.
    #[error("accuracy error: {0}")]
    Accuracy(String),
    /// The request exceeds what the implementation supports.
    #[error("capability error: {0}")]
    Capability(String),
    /// Two independent routes disagree beyond their tolerance.
    #[error("consistency error: {0}")]
    Consistency(String),
    /// The quantity is not defined for the given input.
    #[error("undefined: {0}")]
    Undefined(String),
}

pub type Result<T> = std::result::Result<T, KacError>;
