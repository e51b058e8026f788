//! Error type shared by all modules.

/// Errors produced by state construction, register algebra and optimization.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("subsystem index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("matrix entries must be finite")]
    NonFinite,

    #[error("matrix is not Hermitian: max |h - h^dag| = {deviation:.3e} exceeds {tolerance:.1e}")]
    NotHermitian { deviation: f64, tolerance: f64 },

    #[error("matrix is not unitary: {0}")]
    NotUnitary(String),

    #[error("invalid quantum state: {0}")]
    InvalidState(String),

    #[error("probabilities violate the simplex: {0}")]
    InvalidProbabilities(String),

    #[error("eigenvalue {0:.3e} is negative beyond tolerance")]
    NegativeEigenvalue(f64),

    #[error("post-selection failed{}: success probability {probability:.3e} below floor", letter.map(|x| format!(" for letter {x}")).unwrap_or_default())]
    PostSelectionFailure {
        letter: Option<usize>,
        probability: f64,
    },

    #[error("optimization failed: {0}")]
    OptimizationFailure(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
