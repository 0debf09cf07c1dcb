use thiserror::Error;

use crate::trace::ConvergenceTrace;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Operand shapes do not fit together.
    #[error("{op}: dimension mismatch (expected {expected}, found {found})")]
    DimensionMismatch {
        op: &'static str,
        expected: String,
        found: String,
    },

    /// The Gram matrix of an iterate is numerically singular, so it has no
    /// orthonormal polar factor.
    #[error("degenerate iterate: Gram matrix minimum eigenvalue {min_eigenvalue:.3e} is below {threshold:.0e}")]
    DegenerateIterate { min_eigenvalue: f64, threshold: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dataset is identically zero")]
    ZeroData,

    #[error("dimension {d} exceeds the dense limit {limit}; use an iterative solver instead")]
    TooLarge { d: usize, limit: usize },

    #[error("eigengap estimate {0} is not positive; run burn-in and estimate the gap with the dense oracle first")]
    NonPositiveGap(f64),

    /// Burn-in exhausted its iteration budget. The trace covers every
    /// iteration that was run.
    #[error("no convergence after {iterations} iterations (budget {budget})")]
    NonConvergence {
        iterations: u64,
        budget: u64,
        trace: Box<ConvergenceTrace>,
    },

    #[error("warm start produced a zero vector after {attempts} draws")]
    WarmStartFailed { attempts: usize },

    #[error(
        "initial point is {distance:.3e} from the leading eigenvector, above the admissible {threshold:.3e} (gap / 44)"
    )]
    HypothesisViolated { distance: f64, threshold: f64 },

    #[error("empty probe: at least one sample is required")]
    EmptyProbe,
}

impl Error {
    pub(crate) fn mismatch(op: &'static str, expected: impl ToString, found: impl ToString) -> Self {
        Error::DimensionMismatch {
            op,
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
