use thiserror::Error;

use crate::qstate::Label;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square: {0}x{1}")]
    NotSquare(usize, usize),

    #[error("matrix is not Hermitian: max |M - M^dagger| = {violation:e} exceeds {tol:e}")]
    NotHermitian { violation: f64, tol: f64 },

    #[error("matrix has a negative eigenvalue {0:e}")]
    NegativeEigenvalue(f64),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("keep set is empty")]
    EmptyKeepSet,

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("invalid layout: {0}")]
    InvalidLayout(String),

    #[error("invalid pure Markov spec: {0}")]
    SpecInvalid(String),

    #[error("label {0:?} is not part of the layout")]
    UnknownLabel(Label),

    #[error("reference dimension {reference} is smaller than state rank {rank}")]
    ReferenceTooSmall { reference: usize, rank: usize },

    #[error("invalid quantum state: {0}")]
    InvalidState(String),

    #[error("bad partition: {0}")]
    BadPartition(String),

    #[error("bad layout: {0}")]
    BadLayout(String),

    #[error("Q marginal of the input differs from the recovery anchor by {0:e}")]
    MarginalMismatch(f64),

    #[error("operator is not unitary: max |U^dagger U - I| = {0:e}")]
    NotUnitary(f64),

    #[error("invalid POVM: {0}")]
    PovmInvalid(String),

    #[error("optimizer budget exceeded: {0}")]
    OptimizerBudgetExceeded(String),

    #[error("state at t = {time} is not pure Markov (product residual {residual:e} > {tol:e})")]
    NotMarkovAtIntermediateTime { time: f64, residual: f64, tol: f64 },

    #[error("invalid time grid: {0}")]
    InvalidTimeGrid(String),

    #[error("json: {0}")]
    Json(String),
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NotSquare(..) => "NotSquare",
            Error::NotHermitian { .. } => "NotHermitian",
            Error::NegativeEigenvalue(_) => "NegativeEigenvalue",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::EmptyKeepSet => "EmptyKeepSet",
            Error::NonFinite => "NonFinite",
            Error::InvalidLayout(_) => "InvalidLayout",
            Error::SpecInvalid(_) => "SpecInvalid",
            Error::UnknownLabel(_) => "UnknownLabel",
            Error::ReferenceTooSmall { .. } => "ReferenceTooSmall",
            Error::InvalidState(_) => "InvalidState",
            Error::BadPartition(_) => "BadPartition",
            Error::BadLayout(_) => "BadLayout",
            Error::MarginalMismatch(_) => "MarginalMismatch",
            Error::NotUnitary(_) => "NotUnitary",
            Error::PovmInvalid(_) => "POVMInvalid",
            Error::OptimizerBudgetExceeded(_) => "OptimizerBudgetExceeded",
            Error::NotMarkovAtIntermediateTime { .. } => "NotMarkovAtIntermediateTime",
            Error::InvalidTimeGrid(_) => "InvalidTimeGrid",
            Error::Json(_) => "Json",
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}
