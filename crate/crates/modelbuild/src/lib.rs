//! Assembly of Markov-modulated additive models from phase-type building blocks.
//!
//! A model couples a background Markov chain (the *environment*) with
//! phase-type distributed observations: while the environment sits in state
//! `z`, observations are drawn from the regime law attached to `z`.  The
//! assembled object tracks the observation at phase resolution, producing a
//! Markov additive process whose drift is linear between jumps and whose
//! jumps occur at phase absorption times.
//!
//! The crate provides
//! * [`ChangeChainSpec`] — the environment chain, split into pre-change and
//!   post-change classes, with entry law and routing matrices;
//! * [`RegimeMap`] — the observation law attached to each environment state;
//! * [`MapModel`] — the assembled generator pair `(T, B)`, initial phase
//!   row, and structural masks;
//! * builders for the iid special case, the general change-point model, the
//!   hat-chain augmentation used for false-alarm accounting, and
//!   deterministic change times;
//! * a [`bundle`] module with ready-made demonstration models used by the
//!   test suites and the command-line fixtures.

mod chain;
mod model;
pub mod bundle;

pub use chain::{build_deterministic_change, build_hat_chain, ChangeChainSpec};
pub use model::{
    build_changepoint_map, build_iid_map, JumpLaw, MapModel, RegimeMap, Side,
};

use numkernel::NumError;
use phasetype::PhError;

/// Errors produced while validating or assembling models.
#[derive(Debug, thiserror::Error)]
pub enum BuildError {
    /// A stochasticity, sign, or normalization constraint failed.
    #[error("model validation failed: {0}")]
    Validation(String),
    /// Two components that must agree in size do not.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    /// A regime distribution was rejected.
    #[error(transparent)]
    Ph(#[from] PhError),
    /// A numeric kernel operation failed.
    #[error(transparent)]
    Num(#[from] NumError),
}
