//! Precision-controlled dense real linear algebra.
//!
//! Everything downstream (phase-type algebra, scale-matrix series, passage
//! identities) computes on the two types exported here: [`Real`], an
//! MPFR-backed floating-point number carried at a configurable number of
//! decimal digits, and [`RealMatrix`], a dense row-major matrix of them.
//!
//! The working precision is fixed per [`Ctx`] and recorded in every derived
//! result; identical inputs at identical precision produce bit-identical
//! outputs on every platform.

mod linalg;
mod matrix;
mod real;

pub use linalg::{mat_exp, mat_inverse, mat_norm_inf, mat_solve};
pub use matrix::RealMatrix;
pub use real::{Ctx, Real};

use thiserror::Error;

/// Errors surfaced by the numeric kernel.
#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum NumError {
    /// A pivot fell below the singularity threshold, or the computed inverse
    /// failed its residual bound; the matrix is not invertible at the working
    /// precision.
    #[error("singular matrix: {0}")]
    SingularMatrix(String),
    /// Operands have incompatible shapes.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    /// A square matrix was required.
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    /// A string failed to parse as a real number.
    #[error("invalid real literal: {0}")]
    ParseReal(String),
}
