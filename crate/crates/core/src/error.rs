use crate::criteria::QuadSelector;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite entry at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("state is not normalized (norm2 = {norm2})")]
    NotNormalized { norm2: f64 },

    #[error("state is entangled; witness selector {witness}")]
    Entangled { witness: QuadSelector },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NonHermitian { deviation: f64 },

    #[error("eigensolver did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("numerical breakdown: {0}")]
    Numerical(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
