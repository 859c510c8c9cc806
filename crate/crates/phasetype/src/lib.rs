//! Phase-type (PH) distributions at configurable precision.
//!
//! A PH law is the absorption time of a finite-state continuous-time Markov
//! chain with transient states only: initial row `alpha`, sub-intensity `T`,
//! exit rates `t`, and optional kill rates `q` (defective mass). This crate
//! provides construction and validation, density/CDF evaluation, the cumulant
//! of the moment generating function, exponential tilting in both the MGF and
//! Laplace conventions, and seeded sampling of absorption times.

mod dist;
mod sample;
mod tilt;

pub use dist::PhaseTypeDist;
pub use sample::{sample, PhSampler};
pub use tilt::{laplace_exponent, laplace_tilt, mgf_kappa, tilt, TiltResult};

use thiserror::Error;

/// Errors for phase-type construction and evaluation.
#[derive(Debug, Error)]
pub enum PhError {
    /// A distribution invariant does not hold (names the violation).
    #[error("validation failed: {0}")]
    Validation(String),
    /// The tilting parameter is at or beyond the MGF abscissa.
    #[error("tilt parameter out of range: {0}")]
    ThetaOutOfRange(String),
    /// Evaluation point outside the support.
    #[error("negative argument: {0}")]
    NegativeArgument(String),
    /// Operation requires a non-defective law but kill rates are present.
    #[error("defective distribution: {0}")]
    Defective(String),
    /// Underlying linear-algebra failure.
    #[error(transparent)]
    Num(#[from] numkernel::NumError),
}
