use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("multiplicities must satisfy n, m >= 1 (got n={n}, m={m})")]
    BadMultiplicity { n: i64, m: i64 },
    #[error("n+m = {sum} exceeds the quadrature cost cap {cap}")]
    CostCap { sum: u32, cap: u32 },
    #[error("patch clearance {measured} from the axes is below the required {required}")]
    NonPositiveClearance { measured: f64, required: f64 },
    #[error("invalid patch: {0}")]
    InvalidPatch(String),
    #[error("no lattice cell centre falls inside the patch")]
    EmptyPatch,
    #[error("degenerate polygon: {0}")]
    DegeneratePolygon(String),
    #[error("singular kernel evaluation: target coincides with source and delta = 0")]
    SingularEvaluation,
    #[error("particle set is empty")]
    EmptyParticleSet,
    #[error("the Cartesian bridge supports d = 4 only (got d = {0})")]
    DimensionUnsupported(u32),
    #[error("particle {index} at ({r}, {s}) lies outside the grid box")]
    ParticleOutsideGrid { index: usize, r: f64, s: f64 },
    #[error("point ({r}, {s}) lies outside the grid box")]
    OutsideGrid { r: f64, s: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("velocity vanishes and no dt_max is set")]
    ZeroVelocityTimeout,
    #[error("particle {index} reached the axis at ({r}, {s})")]
    AxisCrossing { index: usize, r: f64, s: f64 },
    #[error("non-finite state: {0}")]
    NonFiniteState(String),
    #[error("blowup suspected: integral {integral:e} with L = {l}")]
    BlowupSuspect { integral: f64, l: f64 },
    #[error("at least two diagnostics records are required")]
    InsufficientHistory,
    #[error("parse error in field `{field}`: {message}")]
    Parse { field: String, message: String },
    #[error("validation failed ({rule}): {message}")]
    Validation { rule: String, message: String },
    #[error("i/o error at {path}: {source}")]
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

    /// Short label used as the halt reason of a run.
    pub fn label(&self) -> &'static str {
        match self {
            Error::AxisCrossing { .. } => "AxisCrossing",
            Error::NonFiniteState(_) => "NonFiniteState",
            Error::BlowupSuspect { .. } => "BlowupSuspect",
            Error::ParticleOutsideGrid { .. } => "ParticleOutsideGrid",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::ZeroVelocityTimeout => "ZeroVelocityTimeout",
            Error::Io { .. } => "IoError",
            _ => "Error",
        }
    }
}
