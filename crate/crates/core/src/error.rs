use thiserror::Error;

/// Errors produced by the qmon library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QmonError {
    #[error("tensor product needs at least one factor")]
    EmptyFactors,
    #[error("operator is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("non-finite entry in operator")]
    NonFinite,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid layout: {0}")]
    InvalidLayout(String),
    #[error("keep set must name at least one factor")]
    EmptyKeepSet,
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("operator is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("density matrix trace is {0}, expected 1")]
    TraceNotOne(f64),
    #[error("negative eigenvalue {0:e} below tolerance")]
    NegativeEigenvalue(f64),
    #[error("rank {rank} out of range for dimension {dim}")]
    InvalidRank { rank: usize, dim: usize },
    #[error("dimension must be at least 2, got {0}")]
    InvalidDimension(usize),
    #[error("phases must sum to zero (mod 2π), deviation {0:e}")]
    PhaseSumViolation(f64),
    #[error("expected {expected} phases, got {found}")]
    PhaseCount { expected: usize, found: usize },
    #[error("operator is not unitary (residual {0:e})")]
    NonUnitary(f64),
    #[error("invalid POVM: {0}")]
    InvalidPovm(String),
    #[error("invalid observable basis: {0}")]
    InvalidBasis(String),
    #[error("noise level {0} outside [0, 1]")]
    EtaOutOfRange(f64),
    #[error("monitoring strength {0} outside [0, 1]")]
    EpsilonOutOfRange(f64),
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error("quantity expected non-negative, got {0:e}")]
    NegativeQuantity(f64),
    #[error("total dimension {dim} exceeds dense cap {cap}")]
    DimensionCapExceeded { dim: usize, cap: usize },
    #[error("fragment size {m} out of range for environment of {n} qudits")]
    FragmentOutOfRange { m: usize, n: usize },
    #[error("{0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, QmonError>;
