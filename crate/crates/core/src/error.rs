use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid data: {0}")]
    Data(String),

    #[error("division by zero: {0}")]
    DivisionByZero(String),

    #[error("degenerate filter: {0}")]
    DegenerateFilter(String),

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("bad magic in {path}: expected \"GMS1\"")]
    BadMagic { path: PathBuf },

    #[error("format error in {path}: {msg}")]
    Format { path: PathBuf, msg: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("unknown scenario `{0}` (expected fig1, table2, table3 or rho_sweep)")]
    UnknownScenario(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
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

    /// Short machine-readable code used by the command-line front end.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::Shape(_) => "shape",
            Error::Data(_) => "data",
            Error::DivisionByZero(_) => "division_by_zero",
            Error::DegenerateFilter(_) => "degenerate_filter",
            Error::UndefinedMetric(_) => "undefined_metric",
            Error::Numerical(_) => "numerical",
            Error::BadMagic { .. } => "bad_magic",
            Error::Format { .. } => "format",
            Error::Config(_) => "config",
            Error::UnknownScenario(_) => "unknown_scenario",
            Error::Io { .. } => "io",
        }
    }
}
