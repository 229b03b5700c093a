use thiserror::Error;

/// Errors raised by the credibility toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CredError {
    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("matrix is not symmetric (relative asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid range: {0}")]
    InvalidRange(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("sample {index} has a zero error vector; NCI takes log of its NEES")]
    DegenerateError { index: usize },

    #[error("no reference MSE available for NCI")]
    MissingReference,

    #[error("empirical MSE is singular; errors are rank deficient")]
    SingularMse,

    #[error("directional probe degenerate: {0} has zero pessimistic-side change")]
    DegenerateProbe(&'static str),

    #[error("track is empty")]
    EmptyTrack,

    #[error("track timestamps are not strictly increasing at index {0}")]
    UnsortedTrack(usize),

    #[error("anchor geometry is singular")]
    SingularGeometry,

    #[error("solver did not converge after {0} iterations")]
    NoConvergence(usize),

    #[error("unknown anchor '{0}'")]
    UnknownAnchor(String),

    #[error("{context}: {message}")]
    Parse { context: String, message: String },
}

impl CredError {
    /// Whether the error stems from a numerical failure rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            CredError::NotPositiveDefinite { .. }
                | CredError::SingularMse
                | CredError::DegenerateProbe(_)
                | CredError::SingularGeometry
                | CredError::NoConvergence(_)
                | CredError::DegenerateError { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, CredError>;
