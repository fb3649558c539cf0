use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator is not Hermitian (relative defect {defect:e})")]
    NotHermitian { defect: f64 },

    #[error("eigensolver failed: {message} (residual {residual:e})")]
    EigenSolver { message: String, residual: f64 },

    #[error("dimension {dimension} exceeds the supported limit of {limit} for {operation}")]
    CapabilityExceeded {
        operation: &'static str,
        dimension: usize,
        limit: usize,
    },

    #[error("weights are not normalized (sum = {sum})")]
    NotNormalized { sum: f64 },

    #[error("microcanonical shell [{low}, {high}] contains no eigenstates")]
    EmptyShell { low: f64, high: f64 },

    #[error("spectrum has zero width; normalized energy is undefined")]
    ZeroSpectralWidth,

    #[error(
        "symmetry precondition violated: |R H R^dag - H| = {hamiltonian_defect:e}, \
         |R A R^dag + A| = {observable_defect:e}"
    )]
    SymmetryViolation {
        hamiltonian_defect: f64,
        observable_defect: f64,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("spectrum cache: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
