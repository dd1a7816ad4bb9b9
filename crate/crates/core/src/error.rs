use thiserror::Error;

/// Errors raised across the library. Variants carry the measured residual or
/// quantity that caused the rejection so callers can report it.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("map is not Hermiticity preserving (imaginary residue {residual:e})")]
    NotHermiticityPreserving { residual: f64 },
    #[error("matrix is not Hermitian (residual {residual:e})")]
    HermiticityViolation { residual: f64 },
    #[error("map is not completely positive (minimum Choi eigenvalue {min_eigenvalue:e})")]
    NotCompletelyPositive { min_eigenvalue: f64 },
    #[error("map is not trace preserving (first-row residual {residual:e})")]
    NotTracePreserving { residual: f64 },
    #[error("matrix is not a generalized inverse (residual {residual:e})")]
    NotGeneralizedInverse { residual: f64 },
    #[error("projector image does not match the image of the map")]
    ImageMismatch,
    #[error("matrix is not idempotent (residual {residual:e})")]
    NotAProjector { residual: f64 },
    #[error("subspace is not transversal: {0}")]
    NotAComplement(String),
    #[error("B does not map into the kernel (residual {residual:e})")]
    InvalidB { residual: f64 },
    #[error("map is not diagonalizable: {0}")]
    NotDiagonalizable(String),
    #[error("family is not divisible: kernel inclusion fails (residual {residual:e})")]
    NotDivisible { residual: f64 },
    #[error("time ordering violated: {0}")]
    OrderingViolated(String),
    #[error("affine family has {0} free parameters, at most 8 are supported")]
    FamilyTooLarge(usize),
    #[error("empty time grid")]
    EmptyGrid,
    #[error("sample count must be positive")]
    NoSamples,
    #[error("unsupported ancilla dimension {0}")]
    InvalidAncilla(usize),
    #[error("model inconsistency: {0}")]
    ModelInconsistency(String),
    #[error("Hamiltonian is not Hermitian (residual {residual:e})")]
    InvalidHamiltonian { residual: f64 },
    #[error("integration failed at t = {last_time}: {reason}")]
    IntegrationFailure { last_time: f64, reason: String },
    #[error("projector rank must be 1, 2 or 3, got {0}")]
    InvalidRank(usize),
    #[error("map has no right inverse (rank {rank} < {required})")]
    NoRightInverse { rank: usize, required: usize },
    #[error("invalid ensemble: {0}")]
    InvalidEnsemble(String),
    #[error("guessing probability for {0} states needs semidefinite programming and is not supported")]
    MultiStateUnsupported(usize),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
