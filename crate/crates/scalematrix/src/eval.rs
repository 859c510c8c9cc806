use std::fmt;

use modelbuild::{JumpLaw, MapModel};
use numkernel::{mat_norm_inf, Ctx, Real, RealMatrix};

use crate::cache::shared_table;
use crate::vtable::VTable;
use crate::ScaleError;

// ---- evaluation results ----

/// Which series a diagnostic refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesKind {
    /// The scale matrix W itself.
    Scale,
    /// The right derivative W′₊.
    Derivative,
    /// The running integral W̄(x) = ∫₀ˣ W(u) du.
    Integral,
}

impl fmt::Display for SeriesKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SeriesKind::Scale => "scale",
            SeriesKind::Derivative => "derivative",
            SeriesKind::Integral => "integral",
        };
        f.write_str(s)
    }
}

/// Notice that the truncated tail of one series was not numerically
/// negligible: the final retained term still exceeded `10^(−P/2)` relative
/// to the partial sum.  The result is returned regardless; callers decide
/// whether to raise `n_max` or treat the output as degraded.
#[derive(Debug, Clone)]
pub struct TruncationWarning {
    pub series: SeriesKind,
    /// ∞-norm contributed by the terms at the truncation index.
    pub last_term_norm: f64,
    /// ∞-norm of the partial sum it is compared against.
    pub sum_norm: f64,
    /// Truncation index the series was cut at.
    pub n_max_used: usize,
}

impl fmt::Display for TruncationWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} series tail not negligible at n_max={}: last term ~{:.3e} against sum ~{:.3e}",
            self.series, self.n_max_used, self.last_term_norm, self.sum_norm
        )
    }
}

/// The scale matrix and its companions at one abscissa.
///
/// All three matrices are reported at the model's working precision; the
/// evaluation itself runs at an elevated internal precision chosen from the
/// observed cancellation between series terms (`guard_digits` extra digits).
#[derive(Debug, Clone)]
pub struct ScaleEval {
    /// Evaluation point.
    pub x: Real,
    /// W(x).
    pub w: RealMatrix,
    /// W′₊(x), the right derivative.
    pub w_prime: RealMatrix,
    /// W̄(x) = ∫₀ˣ W(u) du.
    pub w_bar: RealMatrix,
    /// Series truncation index used.
    pub n_max_used: usize,
    /// Number of ladder terms k included (one per reachable jump count).
    pub k_terms_used: usize,
    /// Decimal digits of the reported entries.
    pub precision_digits: u32,
    /// Extra internal digits the evaluation ran with.
    pub guard_digits: u32,
    /// True when x = 0: the derivative there is the right-limit of the
    /// series, defined by continuation rather than by an actual increment.
    pub derivative_is_right_limit: bool,
    /// Truncation diagnostics; empty when every tail was negligible.
    pub warnings: Vec<TruncationWarning>,
}

// ---- series evaluation ----

const DEFAULT_GUARD_DIGITS: u32 = 30;
// redo the evaluation when measured cancellation comes within this many
// digits of the guard …
const REDO_MARGIN: f64 = 7.0;
// … and give the second pass this many digits beyond the measured loss
const REDO_PAD: u32 = 15;
// largest cancellation the redo will budget for
const MAX_CANCEL_DIGITS: f64 = 320.0;

/// Evaluates W, W′₊, W̄ at `x ≥ 0` for a model with a single fixed jump
/// size `c`.
///
/// The ladder has one term per completed jump: the k-th term is the
/// polynomial `Σ_n V(n,k)·zⁿ/n!` at `z = (c(k−1) − x)/γ`, summed for
/// `1 ≤ k ≤ ⌊x/c⌋+1` (the floor taken with a relative tolerance of
/// `10^(−P/2)` so abscissas on the jump lattice keep their boundary term).
pub fn scale_eval_deterministic(
    model: &MapModel,
    x: &Real,
    n_max: usize,
) -> Result<ScaleEval, ScaleError> {
    let c = match model.jump() {
        JumpLaw::Deterministic(c) => c.clone(),
        JumpLaw::FiniteDiscrete(_) => {
            return Err(ScaleError::Validation(
                "deterministic evaluation called with a discrete jump law".into(),
            ))
        }
    };
    check_abscissa(x)?;
    evaluate(model, x, n_max, AtomSource::Deterministic(c))
}

/// Evaluates W, W′₊, W̄ at `x ≥ 0` for a model whose jump sizes follow a
/// finitely supported law.
///
/// The k-th ladder term averages the same polynomial over the law of the
/// running jump total after k−1 jumps (the (k−1)-fold convolution of the
/// atoms), restricted to totals ≤ x; k rises until that restriction empties.
pub fn scale_eval_discrete_jumps(
    model: &MapModel,
    x: &Real,
    n_max: usize,
) -> Result<ScaleEval, ScaleError> {
    let atoms = match model.jump() {
        JumpLaw::FiniteDiscrete(atoms) => atoms.clone(),
        JumpLaw::Deterministic(_) => {
            return Err(ScaleError::Validation(
                "discrete evaluation called with a deterministic jump law".into(),
            ))
        }
    };
    if atoms.is_empty() {
        return Err(ScaleError::EmptySupport);
    }
    for (y, _) in &atoms {
        if !(y > &model.ctx().zero()) {
            return Err(ScaleError::EmptySupport);
        }
    }
    check_abscissa(x)?;
    evaluate(model, x, n_max, AtomSource::Discrete(atoms))
}

/// Evaluates whichever series matches the model's jump law.
pub fn scale_eval(model: &MapModel, x: &Real, n_max: usize) -> Result<ScaleEval, ScaleError> {
    match model.jump() {
        JumpLaw::Deterministic(_) => scale_eval_deterministic(model, x, n_max),
        JumpLaw::FiniteDiscrete(_) => scale_eval_discrete_jumps(model, x, n_max),
    }
}

fn check_abscissa(x: &Real) -> Result<(), ScaleError> {
    if !x.is_finite() || x.is_sign_negative() {
        return Err(ScaleError::Validation(format!(
            "evaluation point must be finite and nonnegative, got {x}"
        )));
    }
    Ok(())
}

enum AtomSource {
    Deterministic(Real),
    Discrete(Vec<(Real, Real)>),
}

/// One series accumulator plus its magnitude bookkeeping.
struct Accum {
    sum: RealMatrix,
    // largest single-term norm seen, in units of the raw (prefactor-free) sum
    max_term: f64,
    // total norm of the contributions at n = n_max
    last_term: f64,
}

impl Accum {
    fn new(dim: usize, ctx: &Ctx) -> Accum {
        Accum {
            sum: RealMatrix::zeros(dim, dim, ctx),
            max_term: 0.0,
            last_term: 0.0,
        }
    }

    fn add(
        &mut self,
        v: &RealMatrix,
        coeff: &Real,
        v_norm: f64,
        is_last: bool,
    ) -> Result<(), ScaleError> {
        if coeff.is_zero() {
            return Ok(());
        }
        self.sum.accumulate_scaled(v, coeff)?;
        let t = coeff.to_f64().abs() * v_norm;
        if t > self.max_term {
            self.max_term = t;
        }
        if is_last {
            self.last_term += t;
        }
        Ok(())
    }

    /// Cancellation in decimal digits: how far the final sum sits below the
    /// largest term that built it.
    fn cancel_digits(&self) -> f64 {
        if self.max_term <= 0.0 {
            return 0.0;
        }
        let s = mat_norm_inf(&self.sum).to_f64();
        if s <= 0.0 || !s.is_finite() || !self.max_term.is_finite() {
            return MAX_CANCEL_DIGITS;
        }
        (self.max_term / s).log10().max(0.0)
    }

    fn warning(&self, series: SeriesKind, p_digits: u32, n_max: usize) -> Option<TruncationWarning> {
        let s = mat_norm_inf(&self.sum).to_f64();
        let threshold = 10f64.powi(-((p_digits / 2) as i32)) * s;
        if self.last_term > threshold && self.last_term > 0.0 {
            Some(TruncationWarning {
                series,
                last_term_norm: self.last_term,
                sum_norm: s,
                n_max_used: n_max,
            })
        } else {
            None
        }
    }
}

fn evaluate(
    model: &MapModel,
    x: &Real,
    n_max: usize,
    source: AtomSource,
) -> Result<ScaleEval, ScaleError> {
    let p_digits = model.ctx().digits();
    let mut guard = DEFAULT_GUARD_DIGITS;
    let mut redone = false;
    loop {
        let ectx = model.ctx().widened(guard);
        let bits = ectx.bits();
        let xw = x.with_prec_bits(bits);
        let gammaw = model.gamma().with_prec_bits(bits);
        let mut tw = model.t_mod().clone();
        tw.set_prec_bits(bits);
        let mut bw = model.b_mod().clone();
        bw.set_prec_bits(bits);

        let atoms_by_k = match &source {
            AtomSource::Deterministic(c) => {
                deterministic_atoms(&c.with_prec_bits(bits), &xw, p_digits, &ectx)
            }
            AtomSource::Discrete(atoms) => {
                let widened: Vec<(Real, Real)> = atoms
                    .iter()
                    .map(|(y, p)| (y.with_prec_bits(bits), p.with_prec_bits(bits)))
                    .collect();
                discrete_atoms(&widened, &xw, p_digits, &ectx)
            }
        };
        let k_terms = atoms_by_k.len().max(1);
        let table = shared_table(&tw, &bw, n_max, k_terms)?;

        let dim = model.n_dim();
        let mut w_acc = Accum::new(dim, &ectx);
        let mut wp_acc = Accum::new(dim, &ectx);
        let mut wb_acc = Accum::new(dim, &ectx);
        accumulate_series(
            &table,
            &atoms_by_k,
            &xw,
            &gammaw,
            n_max,
            &ectx,
            &mut w_acc,
            &mut wp_acc,
            &mut wb_acc,
        )?;

        let cancel = w_acc
            .cancel_digits()
            .max(wp_acc.cancel_digits())
            .max(wb_acc.cancel_digits());
        if !redone && cancel + REDO_MARGIN > f64::from(guard) {
            guard = cancel.min(MAX_CANCEL_DIGITS).ceil() as u32 + REDO_PAD;
            redone = true;
            continue;
        }

        let mut warnings = Vec::new();
        warnings.extend(w_acc.warning(SeriesKind::Scale, p_digits, n_max));
        warnings.extend(wp_acc.warning(SeriesKind::Derivative, p_digits, n_max));
        warnings.extend(wb_acc.warning(SeriesKind::Integral, p_digits, n_max));

        // prefactors, then report at the model's own precision
        let inv_gamma = &ectx.one() / &gammaw;
        let minus_inv_gamma2 = -&(&inv_gamma * &inv_gamma);
        let minus_one = -&ectx.one();
        let mut w = w_acc.sum.scale(&inv_gamma);
        let mut w_prime = wp_acc.sum.scale(&minus_inv_gamma2);
        let mut w_bar = wb_acc.sum.scale(&minus_one);
        let out_bits = model.ctx().bits();
        w.set_prec_bits(out_bits);
        w_prime.set_prec_bits(out_bits);
        w_bar.set_prec_bits(out_bits);

        return Ok(ScaleEval {
            x: x.clone(),
            w,
            w_prime,
            w_bar,
            n_max_used: n_max,
            k_terms_used: k_terms,
            precision_digits: p_digits,
            guard_digits: guard,
            derivative_is_right_limit: x.is_zero(),
            warnings,
        });
    }
}

/// Core triple-series sweep.  For every ladder index k and every reachable
/// jump total y ≤ x with mass p, accumulates over n:
///
/// ```text
/// W    raw: Σ p·zⁿ/n!        · V(n,k)        z = (y − x)/γ ≤ 0
/// W′₊  raw: Σ p·zⁿ⁻¹/(n−1)!  · V(n,k)        (n ≥ 1)
/// W̄    raw: Σ p·zⁿ⁺¹/(n+1)!  · V(n,k)
/// ```
///
/// Prefactors (1/γ, −1/γ², −1) are applied by the caller.
#[allow(clippy::too_many_arguments)]
fn accumulate_series(
    table: &VTable,
    atoms_by_k: &[Vec<(Real, Real)>],
    x: &Real,
    gamma: &Real,
    n_max: usize,
    ctx: &Ctx,
    w_acc: &mut Accum,
    wp_acc: &mut Accum,
    wb_acc: &mut Accum,
) -> Result<(), ScaleError> {
    for (kk, atoms) in atoms_by_k.iter().enumerate() {
        let k = kk + 1;
        for (y, p) in atoms {
            let z = &(y - x) / gamma;
            // cur = p·zⁿ/n!, prev the value one index back
            let mut cur = p.clone();
            let mut prev = ctx.zero();
            for n in 0..=n_max {
                let next = &(&cur * &z) / &ctx.from_u64(n as u64 + 1);
                if !VTable::is_structural_zero(n, k) {
                    let v = table.get(n, k);
                    let v_norm = table.norm_inf(n, k);
                    let last = n == n_max;
                    w_acc.add(v, &cur, v_norm, last)?;
                    if n >= 1 {
                        wp_acc.add(v, &prev, v_norm, last)?;
                    }
                    wb_acc.add(v, &next, v_norm, last)?;
                }
                if n >= 1 && cur.is_zero() && prev.is_zero() {
                    break;
                }
                prev = cur;
                cur = next;
            }
        }
    }
    Ok(())
}

// ---- jump-total supports ----

/// Single fixed jump size: after k−1 jumps the total is exactly c(k−1);
/// k runs while that total stays ≤ x.
fn deterministic_atoms(c: &Real, x: &Real, p_digits: u32, ctx: &Ctx) -> Vec<Vec<(Real, Real)>> {
    let q = x / c;
    let k_up = (tolerant_floor(&q, p_digits, ctx) + 1).max(1) as usize;
    (0..k_up)
        .map(|kk| vec![(c * &ctx.from_u64(kk as u64), ctx.one())])
        .collect()
}

/// Floor with a relative tolerance of 10^(−P/2): a value within that
/// distance of an integer is treated as sitting on it.
fn tolerant_floor(q: &Real, p_digits: u32, ctx: &Ctx) -> i64 {
    let half = &ctx.one() / &ctx.from_u64(2);
    let nearest = (q + &half).floor_i64();
    let near_r = ctx.from_i64(nearest);
    let scale = q.abs().max(&ctx.one());
    let tol = &Real::pow10(-((p_digits / 2) as i32), &ctx.one()) * &scale;
    if (q - &near_r).abs() <= tol {
        nearest
    } else {
        q.floor_i64()
    }
}

/// `y ≤ x`, allowing a relative overshoot of 10^(−P/2) so lattice points
/// keep their boundary atom.
fn leq_with_tol(y: &Real, x: &Real, p_digits: u32, ctx: &Ctx) -> bool {
    if y <= x {
        return true;
    }
    let scale = x.abs().max(&ctx.one());
    let tol = &Real::pow10(-((p_digits / 2) as i32), &ctx.one()) * &scale;
    (y - x).abs() <= tol
}

/// Supports of the running jump total after 0, 1, 2, … jumps, restricted to
/// [0, x]; stops at the first empty restriction.  Nearby duplicates arising
/// from different addition orders are merged.
fn discrete_atoms(
    jump_atoms: &[(Real, Real)],
    x: &Real,
    p_digits: u32,
    ctx: &Ctx,
) -> Vec<Vec<(Real, Real)>> {
    let mut out: Vec<Vec<(Real, Real)>> = Vec::new();
    let mut current = vec![(ctx.zero(), ctx.one())];
    loop {
        if current.is_empty() {
            break;
        }
        out.push(current.clone());
        let mut next: Vec<(Real, Real)> = Vec::new();
        for (y, p) in &current {
            for (c_j, p_j) in jump_atoms {
                let y2 = y + c_j;
                if leq_with_tol(&y2, x, p_digits, ctx) {
                    next.push((y2, p * p_j));
                }
            }
        }
        current = merge_atoms(next, ctx);
    }
    out
}

fn merge_atoms(mut atoms: Vec<(Real, Real)>, ctx: &Ctx) -> Vec<(Real, Real)> {
    atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("atom values are finite"));
    let mut merged: Vec<(Real, Real)> = Vec::with_capacity(atoms.len());
    let tol_unit = Real::pow10(2 - ctx.digits() as i32, &ctx.one());
    for (y, p) in atoms {
        if let Some((y0, p0)) = merged.last_mut() {
            let scale = y.abs().max(&ctx.one());
            if (&y - &*y0).abs() <= &tol_unit * &scale {
                *p0 = &*p0 + &p;
                continue;
            }
        }
        merged.push((y, p));
    }
    merged
}

// ---- transform-side characterization ----

/// The matrix `F(s) = γsI + T̃ + E[e^{−sC}]·B̃` whose inverse is the
/// Laplace transform of the scale matrix (for s beyond the convergence
/// abscissa).  Defined for s ≥ 0.
pub fn matrix_exponent(model: &MapModel, s: &Real) -> RealMatrix {
    let ctx = model.ctx();
    let phi = model.jump().laplace_transform(s, ctx);
    let gs = model.gamma() * s;
    let f = &RealMatrix::identity(model.n_dim(), ctx).scale(&gs) + model.t_mod();
    f.add_scaled(model.b_mod(), &phi)
        .expect("model matrices share the model dimension")
}

/// Laplace transform of the scale matrix, `∫₀^∞ e^{−sx} W(x) dx`, summed in
/// closed form from the same coefficient table the pointwise series uses:
///
/// ```text
/// (1/(γs)) Σ_k  E[e^{−sC}]^{k−1} Σ_m V(m,k)·(−1/(γs))^m
/// ```
///
/// (each x-integral of a series term is elementary, so no quadrature is
/// involved).  Converges for γs above the joint norm of (T̃, B̃); smaller s
/// is rejected.  Agreement with `matrix_exponent(s)⁻¹` exercises the table
/// against an independent characterization.
pub fn scale_laplace_transform(
    model: &MapModel,
    s: &Real,
    n_max: usize,
) -> Result<RealMatrix, ScaleError> {
    let ectx = model.ctx().widened(10);
    let bits = ectx.bits();
    let sw = s.with_prec_bits(bits);
    let gammaw = model.gamma().with_prec_bits(bits);
    let mut tw = model.t_mod().clone();
    tw.set_prec_bits(bits);
    let mut bw = model.b_mod().clone();
    bw.set_prec_bits(bits);

    let r = mat_norm_inf(&tw).to_f64() + mat_norm_inf(&bw).to_f64();
    let gs = &gammaw * &sw;
    let gs_f = gs.to_f64();
    if !(gs_f > r) {
        return Err(ScaleError::Validation(format!(
            "transform abscissa too small: need γ·s > {r:.6}, got {gs_f:.6}"
        )));
    }
    let ratio = r / gs_f; // geometric bound on the inner sums
    let phi = model.jump().laplace_transform(&sw, &ectx);
    let phi_f = phi.to_f64().abs();
    let q = phi_f * ratio;

    let a = -&(&ectx.one() / &gs);
    let dim = model.n_dim();
    let mut accum = RealMatrix::zeros(dim, dim, &ectx);
    let mut phi_pow = ectx.one(); // φ^(k−1)
    let mut a_lead = ectx.one(); // a^(k−1), the first live inner power
    let rel_target = 10f64.powi(-(model.ctx().digits() as i32) - 5);
    let max_k = n_max + 1; // V(m, k) = 0 for every m ≤ n_max beyond this
    for k in 1..=max_k {
        let table = shared_table(&tw, &bw, n_max, k)?;
        let mut a_pow = a_lead.clone();
        let mut inner = RealMatrix::zeros(dim, dim, &ectx);
        for m in (k - 1)..=n_max {
            inner.accumulate_scaled(table.get(m, k), &a_pow)?;
            a_pow = &a_pow * &a;
        }
        let weight = phi_pow.clone();
        accum.accumulate_scaled(&inner, &weight)?;

        // analytic geometric tail over the remaining k
        let tail = q.powi(k as i32) / ((1.0 - ratio) * (1.0 - q).max(1e-300));
        let accum_norm = mat_norm_inf(&accum).to_f64();
        if tail < rel_target * accum_norm.max(f64::MIN_POSITIVE) {
            break;
        }
        phi_pow = &phi_pow * &phi;
        a_lead = &a_lead * &a;
    }

    let inv_gs = &ectx.one() / &gs;
    let mut out = accum.scale(&inv_gs);
    out.set_prec_bits(model.ctx().bits());
    Ok(out)
}

/// Truncation index at which the series tail at `x` drops below the
/// working accuracy: terms are bounded by `(x·r/γ)ⁿ/n!` with r the joint
/// norm of (T̃, B̃), so the index is read off that majorant.
pub fn suggested_n_max(model: &MapModel, x: &Real) -> usize {
    let r = mat_norm_inf(model.t_mod()).to_f64() + mat_norm_inf(model.b_mod()).to_f64();
    let zr = (x / model.gamma()).to_f64().abs() * r;
    let digits = model.ctx().digits();
    let target = -(f64::from(digits) + 10.0) * std::f64::consts::LN_10;
    if !(zr > 0.0) {
        return 8;
    }
    let mut ln_term = 0.0f64;
    let mut n = 0usize;
    while n < 100_000 {
        n += 1;
        ln_term += zr.ln() - (n as f64).ln();
        if (n as f64) > zr && ln_term < target {
            break;
        }
    }
    n.max(8)
}
