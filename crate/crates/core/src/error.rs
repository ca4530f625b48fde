use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the library.
///
/// The variants are grouped so the CLI can map them onto exit codes:
/// configuration problems, numerical aborts and I/O failures.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("window mismatch: state has radius {state}, potential has radius {potential}")]
    WindowMismatch { state: usize, potential: usize },

    #[error("window radius {radius} too large for a dense eigensolve (limit {limit})")]
    WindowTooLarge { radius: usize, limit: usize },

    #[error("boundary mass {fraction:.3e} of total exceeds the allowed fraction {limit:.3e} at t = {time}")]
    BoundaryMass { time: f64, fraction: f64, limit: f64 },

    #[error("resonance: divisor {divisor:.6e} for k = {k} is below threshold {threshold:.6e}")]
    Resonance { k: String, divisor: f64, threshold: f64 },

    #[error("epsilon above threshold: {0}")]
    ScheduleDiverges(String),

    #[error("Lie series diverging: {0}")]
    SeriesGrowth(String),

    #[error("bound violated: {0}")]
    BoundViolation(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            context: context.into(),
            message: message.into(),
        }
    }

    /// True for the numerical aborts (resonance, boundary leakage, divergence).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::BoundaryMass { .. }
                | Error::Resonance { .. }
                | Error::ScheduleDiverges(_)
                | Error::SeriesGrowth(_)
                | Error::BoundViolation(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
