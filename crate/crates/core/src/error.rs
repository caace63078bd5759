use thiserror::Error;

/// Errors raised by the numerical library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum PsdError {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("the model has zero mass on the requested domain")]
    EmptyMass,

    #[error("unbounded domain: {0}")]
    UnboundedDomain(String),

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("ill-conditioned system: {0}")]
    IllConditioned(String),

    #[error("degenerate model: {0}")]
    DegenerateModel(String),

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, PsdError>;

impl PsdError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        PsdError::InvalidArgument(msg.into())
    }

    /// True when the error stems from bad caller input rather than a numerical failure.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            PsdError::DimensionMismatch { .. }
                | PsdError::InvalidArgument(_)
                | PsdError::Unsupported(_)
                | PsdError::UnboundedDomain(_)
                | PsdError::ContractViolation(_)
        )
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(PsdError::DimensionMismatch { expected, found });
    }
    Ok(())
}
