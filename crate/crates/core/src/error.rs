use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("matrix is not symmetric: |a[{i},{j}] - a[{j},{i}]| = {diff:e}")]
    Asymmetric { i: usize, j: usize, diff: f64 },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not positive definite: eigenvalue {eigenvalue:e} at index {index}")]
    NotPositiveDefinite { eigenvalue: f64, index: usize },

    #[error("symmetric eigensolver did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A hypothesis of the requested bound is violated.
    #[error("hypothesis violated for {bound}: {message}")]
    Hypothesis { bound: &'static str, message: String },

    #[error("missing input: {0}")]
    MissingInput(&'static str),

    #[error("{what} count {count} exceeds cap {cap}")]
    CapExceeded {
        what: &'static str,
        count: f64,
        cap: u64,
    },

    #[error("backward error {value:e} is negative: reference point is not a minimizer")]
    NotOptimal { value: f64 },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn is_hypothesis(&self) -> bool {
        matches!(self, Error::Hypothesis { .. })
    }
}
