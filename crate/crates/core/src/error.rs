use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("matrix is not square: {rows} x {cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("kernel asymmetry {deviation:e} at ({row}, {col}) exceeds tolerance {tolerance:e}")]
    AsymmetryBeyondTolerance {
        row: usize,
        col: usize,
        deviation: f64,
        tolerance: f64,
    },

    #[error("degenerate kernel: maximum entry {0} is not positive")]
    DegenerateKernel(f64),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("non-finite value in {what} at iteration {iteration}")]
    NonFinite { what: &'static str, iteration: usize },

    #[error("eigendecomposition failed: {0}")]
    EigenFailure(String),

    #[error("degenerate affinity: {0}")]
    DegenerateAffinity(String),

    #[error("label vectors differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("invalid labels: {0}")]
    InvalidLabels(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("result table is empty")]
    EmptyTable,

    #[error("every grid cell failed; first failure: {0}")]
    AllCellsFailed(String),

    #[error("serialization error: {0}")]
    Serialization(String),
}

impl Error {
    /// True for failures originating in the numerical routines rather than
    /// in the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NumericalFailure(_)
                | Error::NonFinite { .. }
                | Error::EigenFailure(_)
                | Error::AllCellsFailed(_)
        )
    }

    pub fn is_config(&self) -> bool {
        matches!(self, Error::InvalidConfig(_))
    }
}
