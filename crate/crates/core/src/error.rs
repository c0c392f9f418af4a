use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Non-finite or malformed numeric input.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Caller violated a documented precondition.
    #[error("usage: {0}")]
    Usage(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is singular or numerically singular ({0})")]
    Singular(String),

    #[error("off-diagonal block A_{index} is not invertible (|det| = {det_abs:e})")]
    SingularCoupling { index: usize, det_abs: f64 },

    #[error("persistent singular pivot at shift {lambda}")]
    SingularShift { lambda: f64 },

    #[error("index {index} outside the range covered by family `{family}` (max {max})")]
    OutOfRange {
        family: String,
        index: usize,
        max: usize,
    },

    #[error("section size d*N = {size} exceeds cap {cap}")]
    TooLarge { size: usize, cap: usize },

    #[error("transfer matrices are only defined for scalar families (d = {0})")]
    UnsupportedDimension(usize),

    #[error("solution overflow at index {index}")]
    Overflow { index: usize },

    #[error("solutions are linearly dependent (relative Wronskian {wronskian:e})")]
    DependentSolutions { wronskian: f64 },

    #[error("zero factor in product at index {index}")]
    ZeroFactor { index: usize },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for errors caused by the caller's parameters rather than by the numerics.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Usage(_)
                | Error::InvalidInput(_)
                | Error::DimensionMismatch { .. }
                | Error::Parse { .. }
                | Error::UnsupportedDimension(_)
                | Error::OutOfRange { .. }
                | Error::TooLarge { .. }
        )
    }
}
