//! First-passage identities of the reflected level process.
//!
//! The reflected process drifts between observation completions and jumps
//! at them, pushed back up (or held down) at zero; passage happens when it
//! first exceeds a barrier `a`.  This crate turns the scale-matrix objects
//! of [`scalematrix`] into the two quantities downstream performance
//! analysis needs at that moment:
//!
//! * the law of the modulator phase at passage (a probability kernel,
//!   row per starting phase), and
//! * the expected number of observation completions in each phase before
//!   passage.
//!
//! Both spectral orientations are covered: [`passage_sn`] for models whose
//! level jumps downward (passage by creeping over the barrier), and
//! [`passage_sp`] for upward jumps (passage by overshoot), the latter from
//! an arbitrary starting level.

mod first_passage;

pub use first_passage::{passage_sn, passage_sp, PassageResult};

use numkernel::NumError;
use scalematrix::ScaleError;
use thiserror::Error;

/// Errors surfaced by the passage identities.
#[derive(Error, Debug)]
pub enum PassageError {
    /// An argument fell outside its admissible range.
    #[error("invalid argument: {0}")]
    RangeError(String),
    /// A linear system central to the identity could not be inverted.
    #[error("singular linear system: {0}")]
    SingularSystem(String),
    /// The model loses mass (killing), so expected arrival counts are not
    /// defined by the conservative-case identities.
    #[error("defective model: {0}")]
    DefectiveModel(String),
    /// The model's spectral orientation does not match the identity.
    #[error("side mismatch: {0}")]
    WrongSide(String),
    /// Scale-matrix evaluation failed.
    #[error(transparent)]
    Scale(#[from] ScaleError),
    /// Numeric kernel failure outside the dedicated variants above.
    #[error(transparent)]
    Num(#[from] NumError),
}
