use numkernel::{mat_inverse, NumError, Real, RealMatrix};

use crate::dist::PhaseTypeDist;
use crate::PhError;

/// Outcome of an exponential tilt: the cumulant at the tilting parameter and
/// the tilted law as a proper phase-type representation.
#[derive(Debug, Clone)]
pub struct TiltResult {
    /// Cumulant at the tilting parameter. For `tilt` this is log MGF(theta);
    /// for `laplace_tilt` it is the Laplace-convention exponent, which keeps
    /// sign(kappa) = sign(theta) in both conventions.
    pub kappa: Real,
    /// The tilted distribution.
    pub tilted: PhaseTypeDist,
}

/// Resolvent data shared by the cumulant and the tilt: h = (-(T+theta I))^{-1} t
/// and the MGF value alpha·h.
fn resolvent(d: &PhaseTypeDist, theta: &Real) -> Result<(RealMatrix, Real), PhError> {
    let ctx = d.ctx();
    let n = d.n_phases();
    let mut a = d.t_matrix().scale(&ctx.from_i64(-1));
    for i in 0..n {
        let v = &a[(i, i)] - theta;
        a[(i, i)] = v;
    }
    let inv = match mat_inverse(&a) {
        Ok(m) => m,
        Err(NumError::SingularMatrix(msg)) => {
            return Err(PhError::ThetaOutOfRange(format!(
                "resolvent singular at theta = {theta}: {msg}"
            )))
        }
        Err(e) => return Err(e.into()),
    };
    let tol = Real::pow10(10 - ctx.digits() as i32, &ctx.one());
    let neg_tol = -tol;
    for v in inv.iter() {
        if *v < neg_tol {
            return Err(PhError::ThetaOutOfRange(format!(
                "resolvent entry {v} negative at theta = {theta}"
            )));
        }
    }
    let h = inv.matmul(d.exit_rates())?;
    let mgf = d.alpha().matmul(&h)?.scalar().clone();
    if mgf <= ctx.zero() {
        return Err(PhError::ThetaOutOfRange(format!(
            "MGF value {mgf} not positive at theta = {theta}"
        )));
    }
    Ok((h, mgf))
}

/// Cumulant kappa(theta) = log(alpha·(-(T+theta I))^{-1}·t), the log moment
/// generating function of the absorption time.
pub fn mgf_kappa(d: &PhaseTypeDist, theta: &Real) -> Result<Real, PhError> {
    let (_, mgf) = resolvent(d, theta)?;
    Ok(mgf.ln())
}

/// Cumulant of the negated variable with flipped sign:
/// -log E[e^{-theta Z}] = -mgf_kappa(d, -theta). This is the convention under
/// which upward drift pairs with downward jumps of size |kappa|; it shares the
/// sign(kappa) = sign(theta) property with `mgf_kappa`.
pub fn laplace_exponent(d: &PhaseTypeDist, theta: &Real) -> Result<Real, PhError> {
    let k = mgf_kappa(d, &-theta.clone())?;
    Ok(-k)
}

/// Exponential tilt by theta in the MGF convention: the returned law has
/// density e^{theta x} f(x) e^{-kappa(theta)}. Realized as the diagonal
/// similarity transform with h = (-(T+theta I))^{-1} t:
/// T' = D^{-1}(T + theta I)D, t' = D^{-1} t, alpha' = (alpha ∘ h^T)/(alpha·h)
/// with D = diag(h).
pub fn tilt(d: &PhaseTypeDist, theta: &Real) -> Result<TiltResult, PhError> {
    let ctx = d.ctx();
    let n = d.n_phases();
    let (h, mgf) = resolvent(d, theta)?;
    let kappa = mgf.ln();
    let mut t_new = RealMatrix::zeros(n, n, ctx);
    for i in 0..n {
        for j in 0..n {
            let base = if i == j {
                &d.t_matrix()[(i, j)] + theta
            } else {
                d.t_matrix()[(i, j)].clone()
            };
            t_new[(i, j)] = &(&base * &h[(j, 0)]) / &h[(i, 0)];
        }
    }
    let mut exit_new = RealMatrix::zeros(n, 1, ctx);
    for i in 0..n {
        exit_new[(i, 0)] = &d.exit_rates()[(i, 0)] / &h[(i, 0)];
    }
    let mut alpha_new = RealMatrix::zeros(1, n, ctx);
    for j in 0..n {
        alpha_new[(0, j)] = &(&d.alpha()[(0, j)] * &h[(j, 0)]) / &mgf;
    }
    let tilted = PhaseTypeDist::new(ctx, alpha_new, t_new, Some(exit_new), None)?;
    Ok(TiltResult { kappa, tilted })
}

/// Exponential tilt in the Laplace convention: density proportional to
/// e^{-theta x} f(x). Equivalent to `tilt(d, -theta)` but reported with the
/// Laplace-convention exponent as `kappa`.
pub fn laplace_tilt(d: &PhaseTypeDist, theta: &Real) -> Result<TiltResult, PhError> {
    let r = tilt(d, &-theta.clone())?;
    Ok(TiltResult {
        kappa: -r.kappa,
        tilted: r.tilted,
    })
}

// ---- tests ----
