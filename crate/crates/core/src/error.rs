use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{key}`: {reason}")]
    InvalidParameter { key: String, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("emitter index {index} out of range 1..={n_emitters}")]
    EmitterIndex { index: usize, n_emitters: usize },

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("non-finite entries in {0}")]
    NonFinite(String),

    #[error("propagator not unitary: max |U†U - 1| = {0:e}")]
    NotUnitary(f64),

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("rate matrix has a {dim}-dimensional null space (singular values {values:?})")]
    DegenerateSteadyState { dim: usize, values: Vec<f64> },

    #[error("population {value:e} of state {index} is negative beyond tolerance")]
    NegativePopulation { index: usize, value: f64 },

    #[error("frequency {omega} lies within one quadrature cell of the cutoff {cutoff}")]
    CutoffTooSmall { omega: f64, cutoff: f64 },

    #[error("conservation drift {drift:e} exceeds {limit:e}; reduce the step size")]
    ConservationDrift { drift: f64, limit: f64 },

    #[error("configuration error in `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("convergence failure: {0}")]
    Convergence(String),

    #[error("cache corrupted: {0}")]
    CacheCorrupt(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(key: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            key: key.to_string(),
            reason: reason.into(),
        }
    }
}
