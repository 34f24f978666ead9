use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the measures, fitting, factor and ingest routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("axis not found: {0}")]
    AxisNotFound(String),

    #[error("invalid variable subset: {0}")]
    InvalidSubset(String),

    #[error("arity error: {0}")]
    Arity(String),

    #[error("invalid table: {0}")]
    InvalidTable(String),

    #[error("invalid margin set: {0}")]
    InvalidMargins(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("complex roots: a = {a}, x = {x}, discriminant 1 - (4/a)x = {discriminant}")]
    ComplexRoot { a: f64, x: f64, discriminant: f64 },

    #[error("variable `{0}` has zero variance")]
    ZeroVariance(String),

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    EigenNonConvergence { sweeps: usize, off_norm: f64 },

    #[error("malformed record at line {line}: {message}")]
    MalformedRecord { line: usize, message: String },

    #[error("no features survive thresholding for {0}")]
    EmptyFeatures(String),

    #[error("case labels do not align: first mismatch at row {row} (`{expected}` vs `{found}`)")]
    Alignment {
        row: usize,
        expected: String,
        found: String,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
