use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unbounded horizon: discount 1 requires a finite horizon")]
    UnboundedHorizon,
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("constraint index {index} out of range 1..={max}")]
    ConstraintIndex { index: usize, max: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("regularization must be positive for the closed-form primal function")]
    ZeroRegularization,
    #[error("empty batch")]
    EmptyBatch,
    #[error("at least {required} samples are needed, got {actual}")]
    NotEnoughSamples { required: usize, actual: usize },
    #[error("batch mode mismatch: estimator expects {expected} exploration")]
    ModeMismatch { expected: &'static str },
    #[error("non-finite value in {context}{}", at_iteration(.iteration))]
    NonFinite {
        context: &'static str,
        iteration: Option<usize>,
    },
    #[error("misaligned iteration grids across records")]
    MisalignedGrids,
    #[error("unknown quantity `{0}`")]
    UnknownQuantity(String),
    #[error("empty series")]
    EmptySeries,
    #[error("io error: {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

fn at_iteration(iteration: &Option<usize>) -> String {
    iteration.map(|k| format!(" at iteration {k}")).unwrap_or_default()
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
