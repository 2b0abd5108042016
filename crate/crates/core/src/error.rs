use thiserror::Error;

/// Failure modes shared by every numerical stage.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("{stage}: no convergence after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        stage: &'static str,
        iterations: usize,
        residual: f64,
    },
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("resolution error: {what} (tail {tail:.3e})")]
    Resolution { what: String, tail: f64 },
    #[error("precision error: {0}")]
    Precision(String),
    #[error("jet of order {have} is insufficient, order {need} required")]
    InsufficientJet { need: usize, have: usize },
    #[error("non-positive {0}")]
    NonPositive(String),
    #[error("defect {norm:.3e} exceeds tolerance {tol:.1e} in {what}")]
    Defect { what: String, norm: f64, tol: f64 },
    #[error("range error: {0}")]
    Range(String),
}

impl Error {
    /// Short tag naming the failing stage, used in CLI diagnostics.
    pub fn stage(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::NonConvergence { stage, .. } => stage,
            Error::Geometry(_) => "geometry",
            Error::Resolution { .. } => "resolution",
            Error::Precision(_) => "precision",
            Error::InsufficientJet { .. } => "jet",
            Error::NonPositive(_) => "positivity",
            Error::Defect { .. } => "defect",
            Error::Range(_) => "range",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
