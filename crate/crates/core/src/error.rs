use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the solver pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("length mismatch: expected at most {expected} entries, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("quadrature resolutions disagree by {discrepancy:e} (tolerance {tol:e})")]
    Accuracy { discrepancy: f64, tol: f64 },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("linear solve did not reach tolerance: residual {achieved:e} > {tol:e}")]
    LinearNonConvergence { achieved: f64, tol: f64 },

    #[error("Picard iteration stalled after {iterations} iterations (last relative increment {increment:e})")]
    PicardNonConvergence { iterations: usize, increment: f64 },

    #[error("time step {step} failed: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
