use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GpError {
    #[error("derivative order {requested} exceeds the kernel's supported order {max}")]
    OrderExceeded { requested: usize, max: usize },

    /// Cholesky failed at every jitter level that was tried.
    #[error("matrix is not positive definite after jitter escalation (tried {jitters:?})")]
    Factorization { jitters: Vec<f64> },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("point {x} lies outside the basis domain [0, 1]")]
    Domain { x: f64 },

    #[error("leverage H[{index}] = {value} is too close to one for the leave-one-out identity")]
    DegenerateLeverage { index: usize, value: f64 },

    #[error("posterior variance {value} at grid index {index} is negative beyond tolerance")]
    NegativeVariance { index: usize, value: f64 },

    #[error("every candidate failed: {0}")]
    AllCandidatesFailed(String),
}

pub type Result<T, E = GpError> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> GpError {
    GpError::InvalidInput(msg.into())
}
