use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("parameter {value} outside domain [{start}, {end}]")]
    Domain { value: f64, start: f64, end: f64 },

    #[error("knot multiplicity would exceed degree {degree} at {knot}")]
    Multiplicity { knot: f64, degree: usize },

    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("topology error: {0}")]
    Topology(String),

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("parse error at {path}: {message}")]
    Parse { path: String, message: String },

    #[error("numeric error: non-finite value in {0}")]
    Numeric(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("check failed: {0}")]
    Check(String),

    #[error("training diverged at step {step}: loss {loss}")]
    Training { step: usize, loss: f64 },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn integrity(msg: impl Into<String>) -> Self {
        Error::Integrity(msg.into())
    }

    pub(crate) fn parse(path: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Argument(_) | Error::Domain { .. } | Error::Multiplicity { .. } | Error::Config(_) => 2,
            Error::Parse { .. } | Error::Io { .. } => 3,
            Error::Integrity(_) | Error::Topology(_) => 4,
            Error::Degenerate(_) | Error::Numeric(_) | Error::Check(_) | Error::Training { .. } => 5,
        }
    }

    /// Short stable name of the variant, used in run reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Argument(_) => "argument",
            Error::Domain { .. } => "domain",
            Error::Multiplicity { .. } => "multiplicity",
            Error::Degenerate(_) => "degenerate",
            Error::Topology(_) => "topology",
            Error::Integrity(_) => "integrity",
            Error::Parse { .. } => "parse",
            Error::Numeric(_) => "numeric",
            Error::Config(_) => "config",
            Error::Check(_) => "check",
            Error::Training { .. } => "training",
            Error::Io { .. } => "io",
        }
    }
}
