use numkernel::{Ctx, Real, RealMatrix};

use crate::BuildError;

// ---- environment chain ----

/// Environment chain of a change-point model.
///
/// States are split into a pre-change class of size `m0` and a post-change
/// class of size `m1`.  One observation is emitted per step; after the
/// emission the environment moves according to
///
/// * `k` (`m0 × m0`): pre → pre,
/// * `l` (`m0 × m1`): pre → post (the change happens at this step),
/// * `m` (`m1 × m1`): post → post.
///
/// The post class is closed: once entered it is never left, so the change is
/// permanent.  `beta` (`1 × (m0+m1)`) is the law of the initial state; mass
/// on the post block means the sequence may start already changed.
#[derive(Debug, Clone)]
pub struct ChangeChainSpec {
    ctx: Ctx,
    m0: usize,
    m1: usize,
    k: RealMatrix,
    l: RealMatrix,
    m: RealMatrix,
    beta: RealMatrix,
}

impl ChangeChainSpec {
    /// Builds and validates a chain specification.
    ///
    /// Requires `[k l]` and `m` to be row-stochastic, all entries and `beta`
    /// nonnegative, and `beta` to sum to one; tolerances scale with the
    /// working precision.
    pub fn new(
        ctx: &Ctx,
        k: RealMatrix,
        l: RealMatrix,
        m: RealMatrix,
        beta: RealMatrix,
    ) -> Result<Self, BuildError> {
        let m0 = k.nrows();
        let m1 = m.nrows();
        if k.ncols() != m0 {
            return Err(BuildError::DimensionMismatch(format!(
                "pre-to-pre block must be square, got {}x{}",
                k.nrows(),
                k.ncols()
            )));
        }
        if m.ncols() != m1 {
            return Err(BuildError::DimensionMismatch(format!(
                "post-to-post block must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if l.nrows() != m0 || l.ncols() != m1 {
            return Err(BuildError::DimensionMismatch(format!(
                "routing block must be {}x{}, got {}x{}",
                m0,
                m1,
                l.nrows(),
                l.ncols()
            )));
        }
        if beta.nrows() != 1 || beta.ncols() != m0 + m1 {
            return Err(BuildError::DimensionMismatch(format!(
                "initial law must be 1x{}, got {}x{}",
                m0 + m1,
                beta.nrows(),
                beta.ncols()
            )));
        }
        let spec = Self {
            ctx: ctx.clone(),
            m0,
            m1,
            k,
            l,
            m,
            beta,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Convenience constructor from decimal strings.
    pub fn from_strs(
        ctx: &Ctx,
        k: &[&[&str]],
        l: &[&[&str]],
        m: &[&[&str]],
        beta: &[&str],
    ) -> Result<Self, BuildError> {
        let parse = |rows: &[&[&str]]| -> Result<RealMatrix, BuildError> {
            let mut out = Vec::with_capacity(rows.len());
            for row in rows {
                let mut r = Vec::with_capacity(row.len());
                for s in *row {
                    r.push(ctx.parse(s)?);
                }
                out.push(r);
            }
            Ok(RealMatrix::from_rows(out)?)
        };
        Self::new(ctx, parse(k)?, parse(l)?, parse(m)?, parse(&[beta])?)
    }

    fn validate(&self) -> Result<(), BuildError> {
        let tol = Real::pow10(10 - self.ctx.digits() as i32, &self.ctx.one());
        let neg_tol = -tol.clone();
        let check_nonneg = |mat: &RealMatrix, name: &str| -> Result<(), BuildError> {
            for i in 0..mat.nrows() {
                for j in 0..mat.ncols() {
                    if mat[(i, j)] < neg_tol {
                        return Err(BuildError::Validation(format!(
                            "{name} entry ({i},{j}) is negative"
                        )));
                    }
                }
            }
            Ok(())
        };
        check_nonneg(&self.k, "pre-to-pre block")?;
        check_nonneg(&self.l, "routing block")?;
        check_nonneg(&self.m, "post-to-post block")?;
        check_nonneg(&self.beta, "initial law")?;
        for i in 0..self.m0 {
            let mut sum = self.ctx.zero();
            for j in 0..self.m0 {
                sum += &self.k[(i, j)];
            }
            for j in 0..self.m1 {
                sum += &self.l[(i, j)];
            }
            if (&sum - &self.ctx.one()).abs() > tol {
                return Err(BuildError::Validation(format!(
                    "pre-state row {i} does not sum to one"
                )));
            }
        }
        for i in 0..self.m1 {
            let mut sum = self.ctx.zero();
            for j in 0..self.m1 {
                sum += &self.m[(i, j)];
            }
            if (&sum - &self.ctx.one()).abs() > tol {
                return Err(BuildError::Validation(format!(
                    "post-state row {i} does not sum to one"
                )));
            }
        }
        let mut bsum = self.ctx.zero();
        for j in 0..self.m0 + self.m1 {
            bsum += &self.beta[(0, j)];
        }
        if (&bsum - &self.ctx.one()).abs() > tol {
            return Err(BuildError::Validation(
                "initial law does not sum to one".into(),
            ));
        }
        Ok(())
    }

    // ---- accessors ----

    pub fn ctx(&self) -> &Ctx {
        &self.ctx
    }

    /// Number of pre-change states.
    pub fn m_pre(&self) -> usize {
        self.m0
    }

    /// Number of post-change states.
    pub fn m_post(&self) -> usize {
        self.m1
    }

    /// Total number of environment states.
    pub fn m_total(&self) -> usize {
        self.m0 + self.m1
    }

    pub fn pre_block(&self) -> &RealMatrix {
        &self.k
    }

    pub fn routing_block(&self) -> &RealMatrix {
        &self.l
    }

    pub fn post_block(&self) -> &RealMatrix {
        &self.m
    }

    pub fn initial_law(&self) -> &RealMatrix {
        &self.beta
    }

    /// The full one-step transition matrix on all `m0 + m1` states.
    pub fn transition_matrix(&self) -> RealMatrix {
        let n = self.m_total();
        let mut p = RealMatrix::zeros(n, n, &self.ctx);
        for i in 0..self.m0 {
            for j in 0..self.m0 {
                p[(i, j)] = self.k[(i, j)].clone();
            }
            for j in 0..self.m1 {
                p[(i, self.m0 + j)] = self.l[(i, j)].clone();
            }
        }
        for i in 0..self.m1 {
            for j in 0..self.m1 {
                p[(self.m0 + i, self.m0 + j)] = self.m[(i, j)].clone();
            }
        }
        p
    }

    /// Probability that the change index equals `n`.
    ///
    /// Index `0` means the process starts in the post class; index `n ≥ 1`
    /// means exactly `n` observations are emitted before the change.
    /// Computed from the chain as the post mass of `beta` for `n = 0` and as
    /// `beta_pre · K^{n-1} · L · 1` otherwise.
    pub fn change_index_pmf(&self, n: usize) -> Real {
        if n == 0 {
            let mut s = self.ctx.zero();
            for j in 0..self.m1 {
                s += &self.beta[(0, self.m0 + j)];
            }
            return s;
        }
        // row vector beta_pre advanced n-1 steps through the pre class
        let mut row: Vec<Real> = (0..self.m0).map(|j| self.beta[(0, j)].clone()).collect();
        for _ in 1..n {
            let mut next = vec![self.ctx.zero(); self.m0];
            for (j, slot) in next.iter_mut().enumerate() {
                for (i, r) in row.iter().enumerate() {
                    slot.add_mul(r, &self.k[(i, j)]);
                }
            }
            row = next;
        }
        let mut s = self.ctx.zero();
        for (i, r) in row.iter().enumerate() {
            for j in 0..self.m1 {
                s.add_mul(r, &self.l[(i, j)]);
            }
        }
        s
    }
}

// ---- derived chains ----

/// Augments a chain for false-alarm accounting.
///
/// Every post-change state gains a *copy* that emits observations under the
/// same law but is visited only at the change step: routing out of the pre
/// class is redirected into the copies, and a copy moves to the genuine post
/// class after one emission.  Initial mass that the original chain placed on
/// the post class is placed on the copies, so the first post-change
/// observation is always emitted from a copy state.  The returned chain has
/// `m0` pre states and `2·m1` post states ordered copies first.
pub fn build_hat_chain(chain: &ChangeChainSpec) -> Result<ChangeChainSpec, BuildError> {
    let ctx = chain.ctx();
    let m0 = chain.m_pre();
    let m1 = chain.m_post();
    let mut l_hat = RealMatrix::zeros(m0, 2 * m1, ctx);
    for i in 0..m0 {
        for j in 0..m1 {
            l_hat[(i, j)] = chain.routing_block()[(i, j)].clone();
        }
    }
    let mut m_hat = RealMatrix::zeros(2 * m1, 2 * m1, ctx);
    for i in 0..m1 {
        for j in 0..m1 {
            let v = chain.post_block()[(i, j)].clone();
            m_hat[(i, m1 + j)] = v.clone();
            m_hat[(m1 + i, m1 + j)] = v;
        }
    }
    let mut beta_hat = RealMatrix::zeros(1, m0 + 2 * m1, ctx);
    for j in 0..m0 {
        beta_hat[(0, j)] = chain.initial_law()[(0, j)].clone();
    }
    for j in 0..m1 {
        beta_hat[(0, m0 + j)] = chain.initial_law()[(0, m0 + j)].clone();
    }
    ChangeChainSpec::new(ctx, chain.pre_block().clone(), l_hat, m_hat, beta_hat)
}

/// Builds a chain whose change index is deterministic.
///
/// The pre class is a line of `steps ≥ 1` states traversed left to right, so
/// exactly `steps` observations are emitted before the change; `entry`
/// (`1 × m1`) is the law of the post state entered at the change and `post`
/// is the post-to-post block.
pub fn build_deterministic_change(
    ctx: &Ctx,
    steps: usize,
    entry: RealMatrix,
    post: RealMatrix,
) -> Result<ChangeChainSpec, BuildError> {
    let m1 = post.nrows();
    if entry.nrows() != 1 || entry.ncols() != m1 {
        return Err(BuildError::DimensionMismatch(format!(
            "entry law must be 1x{}, got {}x{}",
            m1,
            entry.nrows(),
            entry.ncols()
        )));
    }
    if steps == 0 {
        return Err(BuildError::Validation(
            "deterministic change needs at least one pre-change step".into(),
        ));
    }
    let mut k = RealMatrix::zeros(steps, steps, ctx);
    for i in 0..steps.saturating_sub(1) {
        k[(i, i + 1)] = ctx.one();
    }
    let mut l = RealMatrix::zeros(steps, m1, ctx);
    for j in 0..m1 {
        l[(steps - 1, j)] = entry[(0, j)].clone();
    }
    let mut beta = RealMatrix::zeros(1, steps + m1, ctx);
    beta[(0, 0)] = ctx.one();
    ChangeChainSpec::new(ctx, k, l, post, beta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> Ctx {
        Ctx::new(30)
    }

    fn two_state_chain(c: &Ctx) -> ChangeChainSpec {
        let half = c.parse("0.5").unwrap();
        let k = RealMatrix::from_rows(vec![vec![half.clone()]]).unwrap();
        let l = RealMatrix::from_rows(vec![vec![half.clone()]]).unwrap();
        let m = RealMatrix::from_rows(vec![vec![c.one()]]).unwrap();
        let beta = RealMatrix::from_rows(vec![vec![c.one(), c.zero()]]).unwrap();
        ChangeChainSpec::new(c, k, l, m, beta).unwrap()
    }

    #[test]
    fn change_index_pmf_is_geometric_for_two_states() {
        let c = ctx();
        let chain = two_state_chain(&c);
        let tol = Real::pow10(-25, &c.one());
        let mut total = c.zero();
        for n in 0..50 {
            let p = chain.change_index_pmf(n);
            let want = c.from_f64(if n == 0 { 0.0 } else { 0.5f64.powi(n as i32) });
            assert!((&p - &want).abs() < tol);
            total += &p;
        }
        assert!((&total - &c.one()).abs() < Real::pow10(-12, &c.one()));
    }

    #[test]
    fn hat_chain_of_two_state_chain_has_expected_shape() {
        let c = ctx();
        let hat = build_hat_chain(&two_state_chain(&c)).unwrap();
        assert_eq!(hat.m_pre(), 1);
        assert_eq!(hat.m_post(), 2);
        // copy row moves to the genuine state, as does the genuine state
        assert!(hat.post_block()[(0, 0)].is_zero());
        assert!((&hat.post_block()[(0, 1)] - &c.one()).abs().is_zero());
        assert!((&hat.post_block()[(1, 1)] - &c.one()).abs().is_zero());
    }

    #[test]
    fn transition_matrix_rows_are_stochastic() {
        let c = ctx();
        let chain = two_state_chain(&c);
        let sums = chain.transition_matrix().row_sums();
        let tol = Real::pow10(-25, &c.one());
        for i in 0..chain.m_total() {
            assert!((&sums[(i, 0)] - &c.one()).abs() < tol);
        }
    }

    #[test]
    fn mismatched_blocks_are_rejected() {
        let c = ctx();
        let k = RealMatrix::from_rows(vec![vec![c.parse("0.5").unwrap()]]).unwrap();
        let l = RealMatrix::from_rows(vec![vec![c.parse("0.5").unwrap()]]).unwrap();
        let m = RealMatrix::identity(2, &c);
        let beta = RealMatrix::from_rows(vec![vec![c.one(), c.zero()]]).unwrap();
        match ChangeChainSpec::new(&c, k, l, m, beta) {
            Err(BuildError::DimensionMismatch(_)) => {}
            other => panic!("expected dimension mismatch, got {other:?}"),
        }
    }
}
