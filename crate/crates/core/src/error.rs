use thiserror::Error;

/// Errors produced by the toolkit.
///
/// Everything except [`Error::Io`] and [`Error::NoConvergence`] is a
/// validation failure of caller-supplied input.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),

    #[error("dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("parameter `{name}` = {value} is outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("state has zero norm")]
    ZeroNorm,

    #[error("invalid probability table: {0}")]
    InvalidTable(String),

    #[error("invalid count table: {0}")]
    InvalidCounts(String),

    #[error("state does not violate the inequality (S = {0})")]
    NoViolation(f64),

    #[error("{method} did not converge after {iterations} iterations")]
    NoConvergence {
        method: &'static str,
        iterations: usize,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("unknown dataset `{0}` (expected `mes` or `oes`)")]
    UnknownDataset(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by invalid input rather than the environment.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io(_) | Error::NoConvergence { .. })
    }

    pub(crate) fn out_of_range(name: &'static str, value: f64, range: &'static str) -> Self {
        Error::OutOfRange { name, value, range }
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        match err.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => Error::Parse(format!("{other:?}")),
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        if err.is_io() {
            Error::Io(err.into())
        } else {
            Error::Config(err.to_string())
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
