//! Dense real linear algebra shared by every solver.
//!
//! Storage is row-major and dense throughout. [`cholesky`] is used to certify
//! positive definiteness; general systems go through [`solve_linear`], which
//! factors with partial-pivoting LU and falls back to a ridge least-squares
//! solve when the matrix is numerically singular.

mod csv_io;
mod dense;
mod factor;
mod spectral;

pub use csv_io::{format_f64, load_matrix, load_vector, read_matrix, read_vector, write_matrix, write_vector};
pub use dense::{DenseMatrix, DenseVector};
pub use factor::{cholesky, solve_linear, Cholesky, LinearSolution, Lu, PIVOT_TOL, RESIDUAL_TOL, RIDGE_REL, SYMMETRY_TOL};
pub use spectral::{
    smallest_eigenvalue, spectral_bound, spectral_upper_bound, DEFAULT_POWER_ITERS, DEFAULT_POWER_TOL,
    SPECTRAL_INFLATION,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },
    #[error("matrix is singular")]
    Singular,
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("data length mismatch: expected {expected}, got {got}")]
    InvalidData { expected: usize, got: usize },
    #[error("row {row} has {got} entries, expected {expected}")]
    Ragged { row: usize, expected: usize, got: usize },
    #[error("empty matrix or vector")]
    Empty,
    #[error("expected a single row or column, got {rows}x{cols}")]
    NotAVector { rows: usize, cols: usize },
    #[error("cannot parse {token:?} at row {row}, column {col}")]
    Parse { row: usize, col: usize, token: String },
    #[error("csv: {0}")]
    Csv(String),
    #[error("io: {0}")]
    Io(String),
}
