use thiserror::Error;

/// Errors produced by the parametrization and analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parametrization: {0}")]
    InvalidParametrization(String),

    #[error("ill-conditioned input: {0}")]
    IllConditioned(String),

    #[error("state matrix is not Hurwitz stable (max real eigenvalue {max_real:e})")]
    NotStable { max_real: f64 },

    #[error("matrix #{index} is not Hurwitz stable (max real eigenvalue {max_real:e})")]
    NotStableAt { index: usize, max_real: f64 },

    #[error("Lyapunov solve failed: residual {residual:e} exceeds tolerance {tolerance:e}")]
    SolverFailure { residual: f64, tolerance: f64 },

    #[error("Lyapunov operator is singular: min |λi + λj| = {gap:e}")]
    SingularLyapunov { gap: f64 },

    #[error("quadrature did not converge: achieved {achieved:e}, requested {requested:e}")]
    QuadratureFailure { achieved: f64, requested: f64 },

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),

    #[error("insufficient data: {samples} samples, at least {required} required")]
    InsufficientData { samples: usize, required: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("eigendecomposition did not converge")]
    EigenFailure,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad user input rather than a numerical
    /// breakdown inside a routine.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParametrization(_)
                | Error::NotStable { .. }
                | Error::NotStableAt { .. }
                | Error::InvalidConfig(_)
                | Error::InsufficientData { .. }
                | Error::DimensionMismatch(_)
                | Error::InvalidInput(_)
                | Error::Io(_)
                | Error::Csv(_)
                | Error::Json(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
