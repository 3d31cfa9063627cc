use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("no face candidates")]
    NoFaceCandidates,

    #[error("skin region not found in {image} image")]
    SkinRegionNotFound { image: String },

    #[error("solver failure at iteration {iteration}: {message}")]
    Solver { iteration: usize, message: String },

    #[error("conjugate gradient did not converge after {iterations} iterations (relative residual {residual:e})")]
    PcgNotConverged { iterations: usize, residual: f64 },

    #[error("model is stale: fitted for a different iterate")]
    StaleModel,

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image codec error on {path}: {message}")]
    Codec { path: PathBuf, message: String },

    #[error("malformed json in {path}: {message}")]
    Json { path: PathBuf, message: String },
}

impl Error {
    /// Stable machine-readable identifier, used in reports and batch logs.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid_input",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::NoFaceCandidates => "no_face_candidates",
            Error::SkinRegionNotFound { .. } => "skin_region_not_found",
            Error::Solver { .. } => "solver_failure",
            Error::PcgNotConverged { .. } => "pcg_not_converged",
            Error::StaleModel => "stale_model",
            Error::Io { .. } => "io",
            Error::Codec { .. } => "codec",
            Error::Json { .. } => "json",
        }
    }

    /// Process exit code: 2 invalid input, 3 skin region missing, 4 solver failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::SkinRegionNotFound { .. } => 3,
            Error::Solver { .. } | Error::PcgNotConverged { .. } | Error::StaleModel => 4,
            _ => 2,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
