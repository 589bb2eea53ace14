use thiserror::Error;

/// Errors produced by the estimation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("Hilbert-space dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),

    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("logarithm undefined: eigenvalue {eigenvalue:e} is at or below the support tolerance")]
    LogOfSingular { eigenvalue: f64 },

    #[error("observables are linearly dependent (Gram eigenvalue {min_eigenvalue:e})")]
    DependentObservables { min_eigenvalue: f64 },

    #[error("expected {expected} values, got {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("reference state has empty support")]
    EmptySupport,

    #[error("targets are not attainable (Lagrange parameters diverged, |kappa| = {kappa_norm:e})")]
    InfeasibleTargets { kappa_norm: f64 },

    #[error("Gibbs fit did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("relative entropy is infinite for sample {sample}; reconstruct a full-rank image first")]
    InfiniteDivergence { sample: String },

    #[error("unknown observable label `{0}`")]
    UnknownLabel(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("json: {0}")]
    Json(String),
}

impl Error {
    /// True for the solver failures that a caller may recover from
    /// (by shrinkage, or by reporting a distinct exit status).
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            Error::InfeasibleTargets { .. } | Error::NonConvergence { .. }
        )
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
