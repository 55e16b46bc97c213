use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised by the core algorithms.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("dimension mismatch in {op}: {lhs:?} vs {rhs:?}")]
    DimensionMismatch {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty input")]
    EmptyInput,
    #[error("graph error: {0}")]
    Graph(String),
    #[error("non-finite gradient for parameter {0}")]
    NonFiniteGradient(String),
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("empty dataset")]
    EmptyDataset,
    #[error("normalization metadata mismatch: {0}")]
    MetaMismatch(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

impl Error {
    pub(crate) fn dims(op: &'static str, lhs: &[usize], rhs: &[usize]) -> Self {
        Error::DimensionMismatch {
            op,
            lhs: lhs.to_vec(),
            rhs: rhs.to_vec(),
        }
    }
}
