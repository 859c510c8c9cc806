//! Scale matrices of spectrally one-sided Markov additive processes.
//!
//! The central object is the matrix function `W(x)` attached to a model with
//! linear drift and phase-type arrival structure: first-passage and overshoot
//! quantities downstream are rational expressions in `W`, its right
//! derivative `W'₊`, and its running integral `W̄`.  All three are evaluated
//! here by a single series expansion whose coefficients come from a two-index
//! table of matrix products — the [`VTable`] — shared and cached across
//! evaluation points.
//!
//! The crate also exposes the transform-side characterization: the matrix
//! exponent `F(s)` and the closed-form Laplace transform of `W`, used to
//! cross-validate the series against an independent representation.

mod cache;
mod eval;
mod vtable;

pub use cache::shared_table;
pub use eval::{
    matrix_exponent, scale_eval, scale_eval_deterministic, scale_eval_discrete_jumps,
    scale_laplace_transform, suggested_n_max, ScaleEval, SeriesKind, TruncationWarning,
};
pub use vtable::{vtable_build, VTable};

use numkernel::NumError;

/// Errors produced by scale-matrix construction and evaluation.
#[derive(Debug, thiserror::Error)]
pub enum ScaleError {
    /// Matrix dimensions are inconsistent.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    /// An argument violates a precondition.
    #[error("invalid argument: {0}")]
    Validation(String),
    /// The operation requires a different jump-law variant.
    #[error("unsupported jump law: {0}")]
    UnsupportedJumpLaw(String),
    /// A discrete jump law has no positive atoms.
    #[error("discrete jump law has empty support")]
    EmptySupport,
    /// A numeric kernel operation failed.
    #[error(transparent)]
    Num(#[from] NumError),
}
