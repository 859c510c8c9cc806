use numkernel::{mat_exp, mat_inverse, Ctx, Real, RealMatrix};

use crate::PhError;

/// Phase-type distribution: absorption time of a transient Markov chain with
/// `n` phases, initial row `alpha`, sub-intensity `T`, exit-rate column `t`,
/// and kill-rate column `q` (zero for non-defective laws).
#[derive(Debug, Clone)]
pub struct PhaseTypeDist {
    ctx: Ctx,
    alpha: RealMatrix,
    t_mat: RealMatrix,
    exit: RealMatrix,
    kill: RealMatrix,
}

impl PhaseTypeDist {
    /// Builds a distribution from its representation. When `exit` is `None`
    /// it is derived as t = -T·1 - q; when `kill` is `None` it defaults to
    /// zero. The representation is validated before being returned.
    pub fn new(
        ctx: &Ctx,
        alpha: RealMatrix,
        t_mat: RealMatrix,
        exit: Option<RealMatrix>,
        kill: Option<RealMatrix>,
    ) -> Result<Self, PhError> {
        let n = t_mat.nrows();
        let kill = kill.unwrap_or_else(|| RealMatrix::zeros(n, 1, ctx));
        let exit = match exit {
            Some(e) => e,
            None => {
                let minus_one = ctx.from_i64(-1);
                let mut e = t_mat.row_sums().scale(&minus_one);
                for i in 0..n {
                    let v = &e[(i, 0)] - &kill[(i, 0)];
                    e[(i, 0)] = v;
                }
                e
            }
        };
        let d = PhaseTypeDist {
            ctx: ctx.clone(),
            alpha,
            t_mat,
            exit,
            kill,
        };
        d.validate()?;
        Ok(d)
    }

    /// Convenience constructor from decimal strings.
    pub fn from_strs(
        ctx: &Ctx,
        alpha: &[&str],
        t_rows: &[&[&str]],
    ) -> Result<Self, PhError> {
        let a = RealMatrix::from_rows(vec![alpha
            .iter()
            .map(|s| ctx.parse(s))
            .collect::<Result<Vec<_>, _>>()?])?;
        let t = RealMatrix::from_rows(
            t_rows
                .iter()
                .map(|r| r.iter().map(|s| ctx.parse(s)).collect::<Result<Vec<_>, _>>())
                .collect::<Result<Vec<_>, _>>()?,
        )?;
        Self::new(ctx, a, t, None, None)
    }

    /// Single-phase exponential law with the given rate.
    pub fn exponential(ctx: &Ctx, rate: &str) -> Result<Self, PhError> {
        let ctx = ctx.clone();
        let r = ctx.parse(rate)?;
        let neg = -r.clone();
        let alpha = RealMatrix::from_rows(vec![vec![ctx.one()]])?;
        let t = RealMatrix::from_rows(vec![vec![neg]])?;
        Self::new(&ctx, alpha, t, None, None)
    }

    pub fn n_phases(&self) -> usize {
        self.t_mat.nrows()
    }

    pub fn ctx(&self) -> &Ctx {
        &self.ctx
    }

    pub fn alpha(&self) -> &RealMatrix {
        &self.alpha
    }

    pub fn t_matrix(&self) -> &RealMatrix {
        &self.t_mat
    }

    pub fn exit_rates(&self) -> &RealMatrix {
        &self.exit
    }

    pub fn kill_rates(&self) -> &RealMatrix {
        &self.kill
    }

    fn tolerance(&self) -> Real {
        Real::pow10(10 - self.ctx.digits() as i32, &self.ctx.one())
    }

    /// Checks every representation invariant to entrywise tolerance
    /// 10^(10-P): alpha a probability row, T a sub-intensity matrix with
    /// strictly negative diagonal, t and q nonnegative, and the rate balance
    /// T·1 + t + q = 0.
    pub fn validate(&self) -> Result<(), PhError> {
        let n = self.t_mat.nrows();
        let tol = self.tolerance();
        let zero = self.ctx.zero();
        if !self.t_mat.is_square() {
            return Err(PhError::Validation(format!(
                "sub-intensity matrix is {}x{}, not square",
                self.t_mat.nrows(),
                self.t_mat.ncols()
            )));
        }
        if self.alpha.nrows() != 1 || self.alpha.ncols() != n {
            return Err(PhError::Validation(format!(
                "initial row has shape {}x{}, want 1x{n}",
                self.alpha.nrows(),
                self.alpha.ncols()
            )));
        }
        for (m, name) in [(&self.exit, "exit"), (&self.kill, "kill")] {
            if m.nrows() != n || m.ncols() != 1 {
                return Err(PhError::Validation(format!(
                    "{name} vector has shape {}x{}, want {n}x1",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        let neg_tol = -tol.clone();
        let mut alpha_sum = zero.clone();
        for j in 0..n {
            let a = &self.alpha[(0, j)];
            if *a < neg_tol {
                return Err(PhError::Validation(format!("alpha[{j}] = {a} is negative")));
            }
            alpha_sum = &alpha_sum + a;
        }
        if (&alpha_sum - &self.ctx.one()).abs() > tol {
            return Err(PhError::Validation(format!(
                "alpha sums to {alpha_sum}, not 1"
            )));
        }
        for i in 0..n {
            for j in 0..n {
                let v = &self.t_mat[(i, j)];
                if i == j && *v >= zero {
                    return Err(PhError::Validation(format!(
                        "diagonal T[{i},{i}] = {v} is not strictly negative"
                    )));
                }
                if i != j && *v < neg_tol {
                    return Err(PhError::Validation(format!(
                        "off-diagonal T[{i},{j}] = {v} is negative"
                    )));
                }
            }
            for (m, name) in [(&self.exit, "t"), (&self.kill, "q")] {
                let v = &m[(i, 0)];
                if *v < neg_tol {
                    return Err(PhError::Validation(format!(
                        "{name}[{i}] = {v} is negative"
                    )));
                }
            }
            let mut balance = &self.exit[(i, 0)] + &self.kill[(i, 0)];
            for j in 0..n {
                balance = &balance + &self.t_mat[(i, j)];
            }
            if balance.abs() > tol {
                return Err(PhError::Validation(format!(
                    "row {i} rate balance T·1 + t + q = {balance}, not 0"
                )));
            }
        }
        Ok(())
    }

    /// True when the kill-rate vector is exactly zero.
    pub fn is_defective(&self) -> bool {
        self.kill.iter().any(|v| !v.is_zero())
    }

    /// Mean absorption time alpha·(-T)^{-1}·1.
    pub fn mean(&self) -> Result<Real, PhError> {
        let minus_one = self.ctx.from_i64(-1);
        let neg_t = self.t_mat.scale(&minus_one);
        let inv = mat_inverse(&neg_t)?;
        let ones = ones_col(self.t_mat.nrows(), &self.ctx);
        let m = self.alpha.matmul(&inv)?.matmul(&ones)?;
        Ok(m.scalar().clone())
    }

    /// Density alpha·e^{Tx}·t at x >= 0.
    pub fn density(&self, x: &Real) -> Result<Real, PhError> {
        if x.is_sign_negative() && !x.is_zero() {
            return Err(PhError::NegativeArgument(format!("density at x = {x}")));
        }
        let e = mat_exp(&self.t_mat.scale(x))?;
        Ok(self.alpha.matmul(&e)?.matmul(&self.exit)?.scalar().clone())
    }

    /// CDF 1 - alpha·e^{Tx}·1 at x >= 0: the probability that the chain has
    /// left the transient states by time x (killed mass counts as absorbed).
    pub fn cdf(&self, x: &Real) -> Result<Real, PhError> {
        if x.is_sign_negative() && !x.is_zero() {
            return Err(PhError::NegativeArgument(format!("cdf at x = {x}")));
        }
        let e = mat_exp(&self.t_mat.scale(x))?;
        let ones = ones_col(self.t_mat.nrows(), &self.ctx);
        let surv = self.alpha.matmul(&e)?.matmul(&ones)?;
        Ok(&self.ctx.one() - surv.scalar())
    }
}

pub(crate) fn ones_col(n: usize, ctx: &Ctx) -> RealMatrix {
    let mut m = RealMatrix::zeros(n, 1, ctx);
    for i in 0..n {
        m[(i, 0)] = ctx.one();
    }
    m
}

// ---- tests ----
