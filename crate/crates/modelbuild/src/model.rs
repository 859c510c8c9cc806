use numkernel::{Ctx, Real, RealMatrix};
use phasetype::PhaseTypeDist;

use crate::{BuildError, ChangeChainSpec};

// ---- observation-side building blocks ----

/// Which boundary of the additive process is free of jumps.
///
/// The flag selects the dual orientation of the assembled process and
/// thereby which family of performance formulas applies downstream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    SpectrallyNegative,
    SpectrallyPositive,
}

/// Law of the additive jump attached to each arrival.
#[derive(Debug, Clone)]
pub enum JumpLaw {
    /// Every arrival contributes the same jump `c > 0`.
    Deterministic(Real),
    /// Finitely many atoms `(size, probability)`.
    FiniteDiscrete(Vec<(Real, Real)>),
}

impl JumpLaw {
    fn validate(&self, ctx: &Ctx) -> Result<(), BuildError> {
        let tol = Real::pow10(10 - ctx.digits() as i32, &ctx.one());
        match self {
            JumpLaw::Deterministic(c) => {
                if !(*c > ctx.zero()) {
                    return Err(BuildError::Validation(
                        "deterministic jump size must be positive".into(),
                    ));
                }
            }
            JumpLaw::FiniteDiscrete(atoms) => {
                if atoms.is_empty() {
                    return Err(BuildError::Validation(
                        "discrete jump law needs at least one atom".into(),
                    ));
                }
                let mut total = ctx.zero();
                for (size, prob) in atoms {
                    if !(*size > ctx.zero()) {
                        return Err(BuildError::Validation(
                            "jump atom sizes must be positive".into(),
                        ));
                    }
                    if prob < &-tol.clone() {
                        return Err(BuildError::Validation(
                            "jump atom probabilities must be nonnegative".into(),
                        ));
                    }
                    total += prob;
                }
                if (&total - &ctx.one()).abs() > tol {
                    return Err(BuildError::Validation(
                        "jump atom probabilities must sum to one".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// `E[e^{-s·C}]` for jump size `C`; used by transform-side identities.
    pub fn laplace_transform(&self, s: &Real, ctx: &Ctx) -> Real {
        match self {
            JumpLaw::Deterministic(c) => (-(s * c)).exp(),
            JumpLaw::FiniteDiscrete(atoms) => {
                let mut total = ctx.zero();
                for (size, prob) in atoms {
                    total += &(prob * &(-(s * size)).exp());
                }
                total
            }
        }
    }
}

/// Observation law attached to each environment state, pre block then post
/// block, in the same order as the corresponding [`ChangeChainSpec`] states.
#[derive(Debug, Clone)]
pub struct RegimeMap {
    pre: Vec<PhaseTypeDist>,
    post: Vec<PhaseTypeDist>,
}

impl RegimeMap {
    /// Collects regime laws; every law must be non-defective.
    pub fn new(
        pre: Vec<PhaseTypeDist>,
        post: Vec<PhaseTypeDist>,
    ) -> Result<Self, BuildError> {
        for d in pre.iter().chain(post.iter()) {
            if d.is_defective() {
                return Err(BuildError::Validation(
                    "regime laws must be non-defective".into(),
                ));
            }
        }
        Ok(Self { pre, post })
    }

    pub fn pre(&self) -> &[PhaseTypeDist] {
        &self.pre
    }

    pub fn post(&self) -> &[PhaseTypeDist] {
        &self.post
    }

    /// Regime map for the false-alarm augmented chain: each post state's
    /// copy emits under the same law as the state it shadows, copies first.
    pub fn hat_regimes(&self) -> RegimeMap {
        let mut post = self.post.clone();
        post.extend(self.post.iter().cloned());
        RegimeMap {
            pre: self.pre.clone(),
            post,
        }
    }
}

// ---- assembled model ----

/// Markov additive model at phase resolution.
///
/// Between arrivals the additive component drifts linearly at rate `gamma`
/// while the phase evolves by the non-arrival intensities `t_mod`; an
/// arrival (intensity matrix `b_mod`) adds a jump drawn from `jump` and may
/// move the environment to a new regime.  `alpha_mod` is the initial phase
/// row.  Phases belonging to pre-change regimes form a prefix of the state
/// space; masks and exit-rate columns are split accordingly.
#[derive(Debug, Clone)]
pub struct MapModel {
    ctx: Ctx,
    side: Side,
    gamma: Real,
    jump: JumpLaw,
    t_mod: RealMatrix,
    b_mod: RealMatrix,
    alpha_mod: RealMatrix,
    exit_pre: RealMatrix,
    exit_post: RealMatrix,
    n_pre: usize,
    block_dims: Vec<usize>,
    n_pre_blocks: usize,
}

impl MapModel {
    pub fn ctx(&self) -> &Ctx {
        &self.ctx
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn gamma(&self) -> &Real {
        &self.gamma
    }

    pub fn jump(&self) -> &JumpLaw {
        &self.jump
    }

    /// Non-arrival intensity matrix (block diagonal of regime generators).
    pub fn t_mod(&self) -> &RealMatrix {
        &self.t_mod
    }

    /// Arrival intensity matrix.
    pub fn b_mod(&self) -> &RealMatrix {
        &self.b_mod
    }

    /// Initial phase row vector.
    pub fn alpha_mod(&self) -> &RealMatrix {
        &self.alpha_mod
    }

    /// Total number of phases.
    pub fn n_dim(&self) -> usize {
        self.t_mod.nrows()
    }

    /// Number of phases belonging to pre-change regimes (a prefix).
    pub fn n_pre_phases(&self) -> usize {
        self.n_pre
    }

    pub fn n_post_phases(&self) -> usize {
        self.n_dim() - self.n_pre
    }

    /// Phase counts of the per-regime blocks in state order.
    pub fn block_dims(&self) -> &[usize] {
        &self.block_dims
    }

    /// How many leading blocks are pre-change regimes.
    pub fn n_pre_blocks(&self) -> usize {
        self.n_pre_blocks
    }

    /// Indicator column of the pre-change phases.
    pub fn pre_mask(&self) -> RealMatrix {
        let mut m = RealMatrix::zeros(self.n_dim(), 1, &self.ctx);
        for i in 0..self.n_pre {
            m[(i, 0)] = self.ctx.one();
        }
        m
    }

    /// Indicator column of the post-change phases.
    pub fn post_mask(&self) -> RealMatrix {
        let mut m = RealMatrix::zeros(self.n_dim(), 1, &self.ctx);
        for i in self.n_pre..self.n_dim() {
            m[(i, 0)] = self.ctx.one();
        }
        m
    }

    /// Exit-rate column restricted to pre-change phases.
    pub fn exit_pre(&self) -> &RealMatrix {
        &self.exit_pre
    }

    /// Exit-rate column restricted to post-change phases.
    pub fn exit_post(&self) -> &RealMatrix {
        &self.exit_post
    }

    /// Full exit-rate column `exit_pre + exit_post`.
    pub fn exit_total(&self) -> RealMatrix {
        let mut t = self.exit_pre.clone();
        for i in 0..t.nrows() {
            let v = &t[(i, 0)] + &self.exit_post[(i, 0)];
            t[(i, 0)] = v;
        }
        t
    }
}

fn check_gamma(gamma: &Real, ctx: &Ctx) -> Result<(), BuildError> {
    if !(*gamma > ctx.zero()) {
        return Err(BuildError::Validation("drift must be positive".into()));
    }
    Ok(())
}

// ---- builders ----

/// Model in which every observation is an independent copy of `obs`.
///
/// The phase process restarts from `obs`'s initial row at each arrival, so
/// the arrival intensities are the rank-one product of the exit column with
/// the initial row.  All phases are pre-change.
pub fn build_iid_map(
    obs: &PhaseTypeDist,
    gamma: &Real,
    jump: JumpLaw,
    side: Side,
) -> Result<MapModel, BuildError> {
    let ctx = obs.ctx().clone();
    check_gamma(gamma, &ctx)?;
    jump.validate(&ctx)?;
    let n = obs.n_phases();
    let b_mod = obs.exit_rates().matmul(obs.alpha())?;
    let exit_pre = obs.exit_rates().clone();
    let exit_post = RealMatrix::zeros(n, 1, &ctx);
    Ok(MapModel {
        ctx,
        side,
        gamma: gamma.clone(),
        jump,
        t_mod: obs.t_matrix().clone(),
        b_mod,
        alpha_mod: obs.alpha().clone(),
        exit_pre,
        exit_post,
        n_pre: n,
        block_dims: vec![n],
        n_pre_blocks: 1,
    })
}

/// Model modulated by a change-point environment chain.
///
/// The phase space is the disjoint union of the regime phase spaces in state
/// order (pre block first).  Non-arrival intensities are block diagonal; an
/// arrival in state `l` absorbs the current phase and restarts in the regime
/// of the next state `j`, weighted by the chain's one-step probability, so
/// the arrival block at `(l, j)` is `P(l→j) · t^{(l)} · α^{(j)}`.  The
/// initial phase row weights each regime's initial row by the chain's
/// initial law.
pub fn build_changepoint_map(
    chain: &ChangeChainSpec,
    regimes: &RegimeMap,
    gamma: &Real,
    jump: JumpLaw,
    side: Side,
) -> Result<MapModel, BuildError> {
    let ctx = chain.ctx().clone();
    check_gamma(gamma, &ctx)?;
    jump.validate(&ctx)?;
    let m0 = chain.m_pre();
    let m1 = chain.m_post();
    if regimes.pre().len() != m0 || regimes.post().len() != m1 {
        return Err(BuildError::DimensionMismatch(format!(
            "chain has {}+{} states but regime map has {}+{} laws",
            m0,
            m1,
            regimes.pre().len(),
            regimes.post().len()
        )));
    }
    let all: Vec<&PhaseTypeDist> = regimes.pre().iter().chain(regimes.post().iter()).collect();
    for d in &all {
        if d.ctx().digits() != ctx.digits() {
            return Err(BuildError::Validation(
                "regime laws and chain must share one precision context".into(),
            ));
        }
    }
    let block_dims: Vec<usize> = all.iter().map(|d| d.n_phases()).collect();
    let mut offsets = Vec::with_capacity(all.len());
    let mut acc = 0;
    for d in &block_dims {
        offsets.push(acc);
        acc += d;
    }
    let n_total = acc;
    let n_pre: usize = block_dims[..m0].iter().sum();

    let mut t_mod = RealMatrix::zeros(n_total, n_total, &ctx);
    for (idx, d) in all.iter().enumerate() {
        let o = offsets[idx];
        for i in 0..d.n_phases() {
            for j in 0..d.n_phases() {
                t_mod[(o + i, o + j)] = d.t_matrix()[(i, j)].clone();
            }
        }
    }

    let mut b_mod = RealMatrix::zeros(n_total, n_total, &ctx);
    let put_block =
        |b: &mut RealMatrix, r: usize, c: usize, w: &Real, from: &PhaseTypeDist, to: &PhaseTypeDist| {
            for i in 0..from.n_phases() {
                for j in 0..to.n_phases() {
                    let v = &(w * &from.exit_rates()[(i, 0)]) * &to.alpha()[(0, j)];
                    b[(offsets[r] + i, offsets[c] + j)] = v;
                }
            }
        };
    for l in 0..m0 {
        for j in 0..m0 {
            let w = chain.pre_block()[(l, j)].clone();
            if !w.is_zero() {
                put_block(&mut b_mod, l, j, &w, all[l], all[j]);
            }
        }
        for j in 0..m1 {
            let w = chain.routing_block()[(l, j)].clone();
            if !w.is_zero() {
                put_block(&mut b_mod, l, m0 + j, &w, all[l], all[m0 + j]);
            }
        }
    }
    for l in 0..m1 {
        for j in 0..m1 {
            let w = chain.post_block()[(l, j)].clone();
            if !w.is_zero() {
                put_block(&mut b_mod, m0 + l, m0 + j, &w, all[m0 + l], all[m0 + j]);
            }
        }
    }

    let mut alpha_mod = RealMatrix::zeros(1, n_total, &ctx);
    for (idx, d) in all.iter().enumerate() {
        let w = chain.initial_law()[(0, idx)].clone();
        for i in 0..d.n_phases() {
            alpha_mod[(0, offsets[idx] + i)] = &w * &d.alpha()[(0, i)];
        }
    }

    let mut exit_pre = RealMatrix::zeros(n_total, 1, &ctx);
    let mut exit_post = RealMatrix::zeros(n_total, 1, &ctx);
    for (idx, d) in all.iter().enumerate() {
        let target = if idx < m0 { &mut exit_pre } else { &mut exit_post };
        for i in 0..d.n_phases() {
            target[(offsets[idx] + i, 0)] = d.exit_rates()[(i, 0)].clone();
        }
    }

    Ok(MapModel {
        ctx,
        side,
        gamma: gamma.clone(),
        jump,
        t_mod,
        b_mod,
        alpha_mod,
        exit_pre,
        exit_post,
        n_pre,
        block_dims,
        n_pre_blocks: m0,
    })
}
