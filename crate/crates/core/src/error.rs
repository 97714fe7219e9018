use thiserror::Error;

use crate::prox::ProxResult;

pub type Result<T, E = LabError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error)]
pub enum LabError {
    #[error("points or functions live in different spaces: {0}")]
    SpaceMismatch(String),

    #[error("argument outside its domain: {0}")]
    DomainError(String),

    #[error("function or set is not proper: {0}")]
    ImproperFunction(String),

    /// The iteration budget ran out; carries the best iterate found.
    #[error("numerical prox did not converge after {} iterations (certified gap {:e})", best.iterations, best.certified_gap)]
    Unconverged { best: Box<ProxResult> },

    #[error("envelope values do not settle over the index window: {0}")]
    NoUniformBound(String),

    #[error("no equi-Lipschitz bound: {0}")]
    NoBound(String),

    #[error("sequence window is unbounded: {0}")]
    Unbounded(String),

    #[error("precondition failed: {0}")]
    PreconditionFailed(String),

    #[error("sequence is not Cauchy in rho: {0}")]
    NotCauchy(String),

    #[error("{0}")]
    Parse(String),
}

impl LabError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        LabError::DomainError(msg.into())
    }

    pub(crate) fn mismatch(msg: impl Into<String>) -> Self {
        LabError::SpaceMismatch(msg.into())
    }
}
