use modelbuild::{JumpLaw, MapModel, Side};
use numkernel::{mat_inverse, Real, RealMatrix};
use scalematrix::{scale_eval, suggested_n_max, ScaleEval};

use crate::PassageError;

// ---- result type ----

/// Passage quantities at barrier `a`: the phase law at the passage time and
/// the expected arrival counts by phase on the way there.
#[derive(Debug, Clone)]
pub struct PassageResult {
    /// Barrier level.
    pub a: Real,
    /// Starting level (upward-jump case only; downward-jump passage starts
    /// from zero).
    pub x0: Option<Real>,
    /// Row i, column j: probability that the modulator is in phase j at
    /// passage, starting from phase i at level zero (or `x0`).
    pub phase_dist: RealMatrix,
    /// Row i, column k: expected number of observation completions while
    /// in phase k strictly before passage (downward jumps) or up to and
    /// including the passage jump (upward jumps), starting from phase i.
    pub arrivals_by_phase: RealMatrix,
    /// Spectral orientation the identities were applied for.
    pub side: Side,
    /// Evaluation notices: series-truncation diagnostics, abscissa nudges.
    pub notes: Vec<String>,
}

// ---- identities ----

/// Passage law for a downward-jump model: the reflected level creeps over
/// the barrier while drifting, so passage happens in the current phase.
///
/// With `Q = T̃ + B̃` and the integrated scale matrix `W̄(a)`,
///
/// ```text
/// phase_dist       = (I − W̄(a)·Q)⁻¹
/// arrivals_by_phase = phase_dist · W̄(a) · diag(t̃)
/// ```
pub fn passage_sn(model: &MapModel, a: &Real) -> Result<PassageResult, PassageError> {
    if model.side() != Side::SpectrallyNegative {
        return Err(PassageError::WrongSide(
            "downward-jump passage called on an upward-jump model".into(),
        ));
    }
    check_barrier(a)?;
    require_conservative(model)?;

    let ctx = model.ctx();
    let n_max = suggested_n_max(model, a).max(100);
    let ev = scale_eval(model, a, n_max)?;
    let mut notes = eval_notes(&ev);

    let q_gen = model.t_mod() + model.b_mod();
    let resolvent = &RealMatrix::identity(model.n_dim(), ctx) - &ev.w_bar.matmul(&q_gen)?;
    let phase_dist =
        mat_inverse(&resolvent).map_err(|e| PassageError::SingularSystem(e.to_string()))?;
    let arrivals = col_scale(&phase_dist.matmul(&ev.w_bar)?, &model.exit_total());
    notes.shrink_to_fit();

    Ok(PassageResult {
        a: a.clone(),
        x0: None,
        phase_dist,
        arrivals_by_phase: arrivals,
        side: Side::SpectrallyNegative,
        notes,
    })
}

/// Passage law for an upward-jump model started at level `x0 ∈ [0, a]`:
/// the level can only cross the barrier by a jump.
///
/// With the kernel `M = W̄(a−x0) − W(a−x0)·W′₊(a)⁻¹·W(a)`,
///
/// ```text
/// phase_dist       = I − M·(T̃ + B̃)
/// arrivals_by_phase = −M · diag(t̃)
/// ```
///
/// When `a` sits on the jump lattice (a multiple of a deterministic jump
/// size), the derivative abscissa is nudged up by `10^(−P/2)·c` before
/// inversion, since the derivative there is one-sided; the nudge is
/// reported in `notes`.
pub fn passage_sp(model: &MapModel, a: &Real, x0: &Real) -> Result<PassageResult, PassageError> {
    if model.side() != Side::SpectrallyPositive {
        return Err(PassageError::WrongSide(
            "upward-jump passage called on a downward-jump model".into(),
        ));
    }
    check_barrier(a)?;
    if x0.is_sign_negative() || x0 > a {
        return Err(PassageError::RangeError(format!(
            "starting level must satisfy 0 ≤ x0 ≤ a, got x0 = {x0} with a = {a}"
        )));
    }
    require_conservative(model)?;

    let ctx = model.ctx();
    let n_max = suggested_n_max(model, a).max(100);
    let gap = a - x0;
    let ev_gap = scale_eval(model, &gap, n_max)?;
    let ev_top = scale_eval(model, a, n_max)?;
    let mut notes = eval_notes(&ev_gap);
    notes.extend(eval_notes(&ev_top));

    // one-sided derivative: step off the lattice before inverting
    let w_prime_top = match lattice_nudge(model, a) {
        Some(nudged) => {
            notes.push(format!(
                "derivative abscissa nudged off the jump lattice to {nudged}"
            ));
            scale_eval(model, &nudged, n_max)?.w_prime
        }
        None => ev_top.w_prime.clone(),
    };
    let w_prime_inv =
        mat_inverse(&w_prime_top).map_err(|e| PassageError::SingularSystem(e.to_string()))?;

    let m_kernel = &ev_gap.w_bar - &ev_gap.w.matmul(&w_prime_inv)?.matmul(&ev_top.w)?;
    let q_gen = model.t_mod() + model.b_mod();
    let phase_dist = &RealMatrix::identity(model.n_dim(), ctx) - &m_kernel.matmul(&q_gen)?;
    let minus_one = -&ctx.one();
    let arrivals = col_scale(&m_kernel, &model.exit_total()).scale(&minus_one);

    Ok(PassageResult {
        a: a.clone(),
        x0: Some(x0.clone()),
        phase_dist,
        arrivals_by_phase: arrivals,
        side: Side::SpectrallyPositive,
        notes,
    })
}

// ---- shared pieces ----

fn check_barrier(a: &Real) -> Result<(), PassageError> {
    if !a.is_finite() || a.is_sign_negative() || a.is_zero() {
        return Err(PassageError::RangeError(format!(
            "barrier must be finite and positive, got {a}"
        )));
    }
    Ok(())
}

/// Arrival-count identities need a conservative modulator: the row sums of
/// T̃ + B̃ must vanish (no killing).
fn require_conservative(model: &MapModel) -> Result<(), PassageError> {
    let ctx = model.ctx();
    let tol = Real::pow10(6 - ctx.digits() as i32, &ctx.one());
    let sums = (model.t_mod() + model.b_mod()).row_sums();
    for i in 0..sums.nrows() {
        if sums[(i, 0)].abs() > tol {
            return Err(PassageError::DefectiveModel(format!(
                "phase {i} loses mass at rate {}",
                -&sums[(i, 0)]
            )));
        }
    }
    Ok(())
}

/// For a deterministic jump size, a barrier within relative `10^(−P/2)` of
/// a lattice point `m·c` is nudged up by `10^(−P/2)·c`.
fn lattice_nudge(model: &MapModel, a: &Real) -> Option<Real> {
    let c = match model.jump() {
        JumpLaw::Deterministic(c) => c,
        JumpLaw::FiniteDiscrete(_) => return None,
    };
    let ctx = model.ctx();
    let q = a / c;
    let half = &ctx.one() / &ctx.from_u64(2);
    let nearest = ctx.from_i64((&q + &half).floor_i64());
    let unit = Real::pow10(-(ctx.digits() as i32 / 2), &ctx.one());
    let tol = &unit * &q.abs().max(&ctx.one());
    if (&q - &nearest).abs() <= tol {
        Some(a + &(&unit * c))
    } else {
        None
    }
}

/// Right-multiplication by diag(v): column j scaled by v[j].
fn col_scale(m: &RealMatrix, v: &RealMatrix) -> RealMatrix {
    let mut out = m.clone();
    for i in 0..out.nrows() {
        for j in 0..out.ncols() {
            let scaled = &out[(i, j)] * &v[(j, 0)];
            out[(i, j)] = scaled;
        }
    }
    out
}

fn eval_notes(ev: &ScaleEval) -> Vec<String> {
    ev.warnings.iter().map(|w| w.to_string()).collect()
}
