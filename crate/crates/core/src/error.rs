use thiserror::Error;

/// Errors produced by the numerical routines in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    /// A diagonal block of a Kronecker-sum system is (numerically) singular.
    #[error("singular tensor system at block {multi_index:?} (shift {shift_re:.3e}{shift_im:+.3e}i, condition estimate {condition:.3e})")]
    SingularSystem {
        multi_index: Vec<usize>,
        shift_re: f64,
        shift_im: f64,
        condition: f64,
    },

    #[error("riccati equation has no admissible solution: {0}")]
    Solvability(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("malformed coefficient file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub(crate) fn mismatch(msg: impl Into<String>) -> Error {
    Error::DimensionMismatch(msg.into())
}
