use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("curvature mismatch: {0} vs {1}")]
    CurvatureMismatch(f64, f64),

    #[error("invalid curvature {0}: must be finite and > 0")]
    InvalidCurvature(f64),

    #[error("point is not inside the ball (norm {norm}, radius {radius})")]
    OutsideBall { norm: f64, radius: f64 },

    #[error("non-finite coordinates")]
    NonFinite,

    #[error("undefined angle at origin")]
    UndefinedAngle,

    #[error("non-finite gradient for node {0}")]
    NonFiniteGradient(usize),

    #[error("unknown node id {0}")]
    UnknownNode(usize),

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("stale forward cache (cache version {cache}, params version {params})")]
    StaleCache { cache: u64, params: u64 },

    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("dataset error: {0}")]
    Data(String),

    #[error("graph is disconnected ({0} components)")]
    Disconnected(usize),

    #[error("config error: {0}")]
    Config(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Process exit status: 2 for configuration and data problems, 3 for
    /// numeric failures at run time.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NonFinite
            | Error::NonFiniteGradient(_)
            | Error::Numeric(_)
            | Error::OutsideBall { .. }
            | Error::UndefinedAngle
            | Error::StaleCache { .. } => 3,
            _ => 2,
        }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
