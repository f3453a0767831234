use thiserror::Error;

/// Failure modes shared by every module.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("kernel is singular at s = t")]
    Singular,
    #[error("index {index} out of range (available: {available})")]
    Index { index: usize, available: usize },
    #[error("requested {requested} modes but only {reliable} are reliable")]
    Resolution { requested: usize, reliable: usize },
    #[error("insufficient spectrum: need {needed} modes, have {have}")]
    InsufficientSpectrum { needed: usize, have: usize },
    #[error("quadrature did not reach tolerance: {0}")]
    Quadrature(String),
    #[error("eigensolver did not converge after {0} sweeps")]
    NoConvergence(usize),
    #[error("branch not contracting: {0}")]
    NotContracting(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// True for caller mistakes (bad arguments), false for numerical failures.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Domain(_)
                | Error::Config(_)
                | Error::GridMismatch(_)
                | Error::Singular
                | Error::Index { .. }
                | Error::Resolution { .. }
                | Error::InsufficientSpectrum { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
