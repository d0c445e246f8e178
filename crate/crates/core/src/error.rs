use thiserror::Error;

/// Errors raised by the factorization kernels, selection algorithms and the
/// experiment runner.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },
    #[error("rank {k} out of range (valid: {lo}..={hi})")]
    RankOutOfRange { k: usize, lo: usize, hi: usize },
    #[error("input does not have orthonormal columns (defect {defect:.3e})")]
    NotOrthonormal { defect: f64 },
    #[error("matrix is numerically rank deficient: {0}")]
    RankDeficient(String),
    #[error("invalid index set: {0}")]
    InvalidIndexSet(String),
    #[error("row subset is singular: largest principal angle equals pi/2")]
    RightAngle,
    #[error("residual stable rank undefined: sigma_(k+1) = 0")]
    UndefinedStableRank,
    #[error("Hadamard order {0} is not a power of two")]
    NonDyadic(usize),
    #[error("{what} did not converge after {iterations} iterations")]
    NotConverged { what: &'static str, iterations: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("instance too large: {0}")]
    TooLarge(String),
    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
