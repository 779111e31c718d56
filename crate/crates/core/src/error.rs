use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure class, used by the CLI to pick a stable exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad parameters, configuration or schema violations.
    Config,
    /// Unreadable, malformed or insufficient input data.
    Data,
    /// Numerical failure: singular systems, divergence, failed self-checks.
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("ill-conditioned Gram matrix: smallest eigenvalue {min_eigenvalue:e} <= 1e-12")]
    IllConditioned { min_eigenvalue: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at row {row}, column '{column}': {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("malformed csv: {0}")]
    Csv(String),

    #[error("duplicate date {date}")]
    DuplicateDate { date: String },

    #[error("missing value in series '{column}' on {date}")]
    MissingValue { column: String, date: String },

    #[error("coverage error: {0}")]
    Coverage(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("cannot scale constant column '{column}'")]
    ConstantColumn { column: String },

    #[error("MAPE undefined: actual value is zero at index {index} (mse={mse}, mae={mae})")]
    MapeUndefined { index: usize, mse: f64, mae: f64 },

    #[error("training diverged at epoch {epoch} (loss {loss})")]
    Divergence { epoch: usize, loss: f64 },

    #[error("gradient check failed: {0}")]
    GradientCheck(String),

    #[error("invalid checkpoint: {0}")]
    Checkpoint(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Parameter(_) | Error::Config(_) | Error::Json(_) | Error::Checkpoint(_) => ErrorClass::Config,
            Error::Io { .. }
            | Error::Parse { .. }
            | Error::Csv(_)
            | Error::DuplicateDate { .. }
            | Error::MissingValue { .. }
            | Error::Coverage(_)
            | Error::InsufficientData(_)
            | Error::ConstantColumn { .. }
            | Error::MapeUndefined { .. } => ErrorClass::Data,
            Error::Shape(_)
            | Error::NotSymmetric { .. }
            | Error::Singular(_)
            | Error::IllConditioned { .. }
            | Error::Divergence { .. }
            | Error::GradientCheck(_) => ErrorClass::Numerical,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
