use thiserror::Error;

/// Errors raised by the solver, the problem suite and the run harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("particle ensemble is empty")]
    EmptyEnsemble,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite penalty value at particle {index}")]
    NonFiniteValue { index: usize },

    #[error("non-finite coordinate in particle {index} after the step")]
    NonFiniteCoordinate { index: usize },

    #[error("non-finite objective or penalty at x = {x:?}")]
    NonFiniteEvaluation { x: Vec<f64> },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("problem `{0}` has no known solution")]
    MissingSolution(String),

    #[error("{0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
