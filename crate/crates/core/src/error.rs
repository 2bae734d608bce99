use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid probability vector: {0}")]
    InvalidProbabilities(String),

    #[error("basis index {index} exceeds the usable range (max {max})")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("multi-index {0:?} contains index 0; canonical kernels have no constant component")]
    ConstantIndex(Vec<usize>),

    #[error("multi-index {index:?} has length {got}, expected order {expected}")]
    OrderMismatch {
        index: Vec<usize>,
        expected: usize,
        got: usize,
    },

    #[error("measure mismatch: {0}")]
    MeasureMismatch(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("sample is empty")]
    EmptySample,

    #[error("sample size {n} is smaller than kernel order {m}")]
    SampleTooSmall { n: usize, m: usize },

    #[error("naive evaluation limit exceeded: {0}")]
    NaiveLimit(String),

    #[error("invalid transition matrix: {0}")]
    InvalidChain(String),

    #[error("enumeration too large: {0}")]
    HorizonTooLarge(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("malformed tensor: {0}")]
    MalformedTensor(String),
}
