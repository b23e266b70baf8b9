use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("SQUID inductance diverges: |cos(pi * flux_ratio)| = {cosine:.3e} at flux_ratio = {flux_ratio}")]
    SquidDivergence { flux_ratio: f64, cosine: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("Liouvillian too large: {dim} states (limit {limit})")]
    DimensionOverflow { dim: usize, limit: usize },

    #[error("mean-field solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    MeanFieldNonConvergence { iterations: usize, residual: f64 },

    #[error("steady-state solve failed: {0}")]
    SteadyState(String),

    #[error("undefined g2: total population is {0:e}")]
    ZeroPopulation(f64),

    #[error("non-physical state: {0}")]
    NonPhysical(String),

    #[error("calibration failure: {0}")]
    Calibration(String),

    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("pipeline failure: {0}")]
    Pipeline(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
