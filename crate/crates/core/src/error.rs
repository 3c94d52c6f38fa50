use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{what} has length {got}, expected {expected}")]
    Dimension {
        what: &'static str,
        got: usize,
        expected: usize,
    },

    #[error("index {index} out of range 0..{limit}")]
    IndexOutOfRange { index: usize, limit: usize },

    #[error("invalid parity-check matrix: {0}")]
    InvalidMatrix(String),

    #[error("alist line {line}: {msg}")]
    Alist { line: usize, msg: String },

    #[error("infeasible degree distribution: {0}")]
    InfeasibleDistribution(String),

    #[error("non-finite input {0}")]
    NonFinite(f64),

    #[error("fixed-point formats differ: {0} vs {1}")]
    FormatMismatch(String, String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("peeling did not terminate within {0} assignments")]
    PeelLimit(usize),

    #[error("outside key-rate model domain: {0}")]
    ModelDomain(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
