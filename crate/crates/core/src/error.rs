use std::path::PathBuf;

use thiserror::Error;

use crate::spin::ValidityReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A physical parameter is outside the range where a formula is defined.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid geometry: {0}")]
    Geometry(String),

    /// Malformed lattice spec, time grid or other structural input.
    #[error("invalid specification: {0}")]
    Spec(String),

    #[error("simulation stalled: total event rate is zero")]
    Stall,

    #[error("system of {spins} spins exceeds the capacity of {max} spins for {what}")]
    Capacity {
        what: &'static str,
        spins: usize,
        max: usize,
    },

    #[error("propagation failed: {0}")]
    Propagation(String),

    #[error("adiabatic elimination failed: {0}")]
    Elimination(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("config error: {0}")]
    Schema(String),

    #[error("adiabatic validity check failed (ratio {:.3e} < threshold {:.3e})", .0.ratio, .0.threshold)]
    Validity(Box<ValidityReport>),

    #[error("time grids differ: {0}")]
    GridMismatch(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
