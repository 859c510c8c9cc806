use modelbuild::bundle;
use modelbuild::{
    build_changepoint_map, build_deterministic_change, build_hat_chain, build_iid_map,
    BuildError, ChangeChainSpec, JumpLaw, MapModel, RegimeMap, Side,
};
use numkernel::{Ctx, Real, RealMatrix};
use phasetype::{PhSampler, PhaseTypeDist};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

fn ctx() -> Ctx {
    Ctx::new(30)
}

fn tol(c: &Ctx, exp10: i32) -> Real {
    Real::pow10(exp10, &c.one())
}

/// Max absolute row sum of T + B; zero for conservative modulators.
fn conservation_defect(m: &MapModel) -> Real {
    let c = m.ctx();
    let mut worst = c.zero();
    for i in 0..m.n_dim() {
        let mut s = c.zero();
        for j in 0..m.n_dim() {
            s += &m.t_mod()[(i, j)];
            s += &m.b_mod()[(i, j)];
        }
        worst = worst.max(&s.abs());
    }
    worst
}

fn alpha_sum(m: &MapModel) -> Real {
    let c = m.ctx();
    let mut s = c.zero();
    for j in 0..m.n_dim() {
        s += &m.alpha_mod()[(0, j)];
    }
    s
}

// ---- iid models ----

#[test]
fn iid_exponential_is_scalar_pair() {
    let c = ctx();
    let exp = PhaseTypeDist::exponential(&c, "0.7").unwrap();
    let m = build_iid_map(
        &exp,
        &c.parse("0.1").unwrap(),
        JumpLaw::Deterministic(c.one()),
        Side::SpectrallyNegative,
    )
    .unwrap();
    assert_eq!(m.n_dim(), 1);
    assert!((&m.t_mod()[(0, 0)] - &c.parse("-0.7").unwrap()).abs() < tol(&c, -25));
    assert!((&m.b_mod()[(0, 0)] - &c.parse("0.7").unwrap()).abs() < tol(&c, -25));
    assert!((&m.alpha_mod()[(0, 0)] - &c.one()).abs() < tol(&c, -25));
}

#[test]
fn iid_three_phase_is_rank_one_and_conservative() {
    let c = ctx();
    let m = bundle::iid_model(&c, Side::SpectrallyNegative).unwrap();
    assert_eq!(m.n_dim(), 3);
    assert_eq!(m.n_pre_phases(), 3);
    assert_eq!(m.block_dims(), &[3]);
    // arrival block is the outer product of exit column and initial row
    let base = bundle::law_three_phase(&c);
    for i in 0..3 {
        for j in 0..3 {
            let want = &base.exit_rates()[(i, 0)] * &base.alpha()[(0, j)];
            assert!((&m.b_mod()[(i, j)] - &want).abs() < tol(&c, -25));
        }
    }
    assert!(conservation_defect(&m) < tol(&c, -25));
    // all phases pre-change: post mask empty, post exits zero
    for i in 0..3 {
        assert!((&m.pre_mask()[(i, 0)] - &c.one()).abs().is_zero());
        assert!(m.post_mask()[(i, 0)].is_zero());
        assert!(m.exit_post()[(i, 0)].is_zero());
    }
}

#[test]
fn bundled_jump_sizes_match_cumulants() {
    let c = ctx();
    // frozen from two independent high-precision evaluations of the
    // three-phase law's cumulant at the bundled tilt parameter
    let sn = c.parse("0.39462481338554630964843125499826").unwrap();
    let sp = c.parse("0.65010007511513012709154460115418").unwrap();
    assert!((&bundle::jump_size(&c, Side::SpectrallyNegative) - &sn).abs() < tol(&c, -28));
    assert!((&bundle::jump_size(&c, Side::SpectrallyPositive) - &sp).abs() < tol(&c, -28));
}

// ---- change-point assembly ----

#[test]
fn contaminated_model_layout() {
    let c = ctx();
    let eps = c.parse("0.1").unwrap();
    let m = bundle::contaminated_model(&c, Side::SpectrallyNegative, &eps).unwrap();
    assert_eq!(m.n_dim(), 11);
    assert_eq!(m.n_pre_phases(), 3);
    assert_eq!(m.block_dims(), &[3, 3, 5]);
    assert_eq!(m.n_pre_blocks(), 1);
    assert!(conservation_defect(&m) < tol(&c, -25));
    assert!((&alpha_sum(&m) - &c.one()).abs() < tol(&c, -25));
    for v in m.b_mod().iter() {
        assert!(!(v < &c.zero()));
    }
    // exit columns split the total exit rate by block class
    let total = m.exit_total();
    let minus_one = c.from_i64(-1);
    let t_row_sums = m.t_mod().row_sums().scale(&minus_one);
    assert!(total.max_abs_diff(&t_row_sums).unwrap() < tol(&c, -25));
    for i in 0..3 {
        assert!(m.exit_post()[(i, 0)].is_zero());
    }
    for i in 3..11 {
        assert!(m.exit_pre()[(i, 0)].is_zero());
    }
}

#[test]
fn contaminated_arrival_blocks_follow_chain_weights() {
    let c = ctx();
    let eps = c.parse("0.1").unwrap();
    let lam = c.parse("0.2").unwrap();
    let m = bundle::contaminated_model(&c, Side::SpectrallyNegative, &eps).unwrap();
    let base = bundle::law_three_phase(&c);
    let shift = bundle::shifted_law(&c, Side::SpectrallyNegative);
    let wide = bundle::law_five_phase(&c);
    let one = c.one();
    // pre -> pre carries weight 1 - lam
    let w_keep = &one - &lam;
    for i in 0..3 {
        for j in 0..3 {
            let want = &(&w_keep * &base.exit_rates()[(i, 0)]) * &base.alpha()[(0, j)];
            assert!((&m.b_mod()[(i, j)] - &want).abs() < tol(&c, -25));
        }
    }
    // pre -> shifted regime carries lam(1-eps); pre -> contaminant lam*eps
    let w_shift = &lam * &(&one - &eps);
    let w_wide = &lam * &eps;
    for i in 0..3 {
        for j in 0..3 {
            let want = &(&w_shift * &base.exit_rates()[(i, 0)]) * &shift.alpha()[(0, j)];
            assert!((&m.b_mod()[(i, 3 + j)] - &want).abs() < tol(&c, -25));
        }
        for j in 0..5 {
            let want = &(&w_wide * &base.exit_rates()[(i, 0)]) * &wide.alpha()[(0, j)];
            assert!((&m.b_mod()[(i, 6 + j)] - &want).abs() < tol(&c, -25));
        }
    }
    // post regimes are frozen: no cross blocks between the two post states
    for i in 3..6 {
        for j in 6..11 {
            assert!(m.b_mod()[(i, j)].is_zero());
            assert!(m.b_mod()[(j, i)].is_zero());
        }
    }
}

#[test]
fn mixed_model_layout() {
    let c = ctx();
    let m = bundle::mixed_model(&c, Side::SpectrallyPositive).unwrap();
    assert_eq!(m.n_dim(), 34);
    assert_eq!(m.n_pre_phases(), 21);
    assert_eq!(m.block_dims(), &[3, 5, 5, 5, 3, 3, 5, 5]);
    assert_eq!(m.n_pre_blocks(), 5);
    assert!(conservation_defect(&m) < tol(&c, -25));
    assert!((&alpha_sum(&m) - &c.one()).abs() < tol(&c, -25));
    // structural zeros of the routing survive assembly: the first pre
    // regime never routes to the second or third post regime
    for i in 0..3 {
        for j in 24..34 {
            assert!(m.b_mod()[(i, j)].is_zero());
        }
    }
}

#[test]
fn single_state_chain_reduces_to_iid_by_lumping() {
    let c = ctx();
    let lam = c.parse("0.2").unwrap();
    let one = c.one();
    let base = bundle::law_three_phase(&c);
    let k = RealMatrix::from_rows(vec![vec![&one - &lam]]).unwrap();
    let l = RealMatrix::from_rows(vec![vec![lam.clone()]]).unwrap();
    let mm = RealMatrix::from_rows(vec![vec![one.clone()]]).unwrap();
    let beta = RealMatrix::from_rows(vec![vec![one.clone(), c.zero()]]).unwrap();
    let chain = ChangeChainSpec::new(&c, k, l, mm, beta).unwrap();
    let regimes = RegimeMap::new(vec![base.clone()], vec![base.clone()]).unwrap();
    let gamma = c.parse("0.1").unwrap();
    let dup = build_changepoint_map(
        &chain,
        &regimes,
        &gamma,
        JumpLaw::Deterministic(c.one()),
        Side::SpectrallyNegative,
    )
    .unwrap();
    let iid = build_iid_map(
        &base,
        &gamma,
        JumpLaw::Deterministic(c.one()),
        Side::SpectrallyNegative,
    )
    .unwrap();
    assert_eq!(dup.n_dim(), 6);
    // both copies carry the same law, so collapsing duplicated phases maps
    // the 6x6 generator onto the 3x3 one: sum of each duplicated column
    // pair against the original, row by row
    let t = tol(&c, -25);
    for i in 0..6 {
        for j in 0..3 {
            let dup_sum = &(&dup.t_mod()[(i, j)] + &dup.t_mod()[(i, j + 3)])
                + &(&dup.b_mod()[(i, j)] + &dup.b_mod()[(i, j + 3)]);
            let orig = &iid.t_mod()[(i % 3, j)] + &iid.b_mod()[(i % 3, j)];
            assert!((&dup_sum - &orig).abs() < t);
        }
    }
    // initial phase row marginalizes onto the iid one
    for j in 0..3 {
        let s = &dup.alpha_mod()[(0, j)] + &dup.alpha_mod()[(0, j + 3)];
        assert!((&s - &iid.alpha_mod()[(0, j)]).abs() < t);
    }
}

// ---- hat chain ----

#[test]
fn hat_chain_blocks_as_printed() {
    let c = ctx();
    let eps = c.parse("0.1").unwrap();
    let mu = c.parse("0.1").unwrap();
    let lam = c.parse("0.2").unwrap();
    let chain = bundle::contaminated_chain(&c, &eps, &mu, &lam).unwrap();
    let hat = build_hat_chain(&chain).unwrap();
    assert_eq!(hat.m_pre(), 1);
    assert_eq!(hat.m_post(), 4);
    let t = tol(&c, -25);
    let one = c.one();
    // routing goes into the copies only
    let w_shift = &lam * &(&one - &eps);
    let w_wide = &lam * &eps;
    assert!((&hat.routing_block()[(0, 0)] - &w_shift).abs() < t);
    assert!((&hat.routing_block()[(0, 1)] - &w_wide).abs() < t);
    assert!(hat.routing_block()[(0, 2)].is_zero());
    assert!(hat.routing_block()[(0, 3)].is_zero());
    // copies and genuine states both move into the genuine block
    let expect = [
        [0, 0, 1, 0],
        [0, 0, 0, 1],
        [0, 0, 1, 0],
        [0, 0, 0, 1],
    ];
    for i in 0..4 {
        for j in 0..4 {
            let want = c.from_u64(expect[i][j]);
            assert!((&hat.post_block()[(i, j)] - &want).abs() < t);
        }
    }
    // initial mass sits on pre states and copies, never on genuine states
    assert!((&hat.initial_law()[(0, 0)] - &(&one - &mu)).abs() < t);
    assert!((&hat.initial_law()[(0, 1)] - &(&mu * &(&one - &eps))).abs() < t);
    assert!((&hat.initial_law()[(0, 2)] - &(&mu * &eps)).abs() < t);
    assert!(hat.initial_law()[(0, 3)].is_zero());
    assert!(hat.initial_law()[(0, 4)].is_zero());
    // all rows of the full transition matrix are stochastic
    let p = hat.transition_matrix();
    let sums = p.row_sums();
    for i in 0..5 {
        assert!((&sums[(i, 0)] - &one).abs() < t);
    }
}

#[test]
fn hat_chain_without_change_never_enters_copies() {
    let c = ctx();
    let k = RealMatrix::from_rows(vec![vec![c.one()]]).unwrap();
    let l = RealMatrix::zeros(1, 1, &c);
    let m = RealMatrix::from_rows(vec![vec![c.one()]]).unwrap();
    let beta = RealMatrix::from_rows(vec![vec![c.one(), c.zero()]]).unwrap();
    let chain = ChangeChainSpec::new(&c, k, l, m, beta).unwrap();
    let hat = build_hat_chain(&chain).unwrap();
    for j in 0..hat.m_post() {
        assert!(hat.routing_block()[(0, j)].is_zero());
        assert!(hat.initial_law()[(0, 1 + j)].is_zero());
    }
}

#[test]
fn hat_model_doubles_post_phases() {
    let c = ctx();
    let eps = c.parse("0.1").unwrap();
    let mu = c.parse("0.1").unwrap();
    let lam = c.parse("0.2").unwrap();
    let chain = bundle::contaminated_chain(&c, &eps, &mu, &lam).unwrap();
    let regimes = bundle::contaminated_regimes(&c, Side::SpectrallyPositive).unwrap();
    let hat = build_changepoint_map(
        &build_hat_chain(&chain).unwrap(),
        &regimes.hat_regimes(),
        &c.parse("0.1").unwrap(),
        JumpLaw::Deterministic(c.one()),
        Side::SpectrallyPositive,
    )
    .unwrap();
    assert_eq!(hat.n_dim(), 3 + 8 + 8);
    assert_eq!(hat.n_pre_phases(), 3);
    assert_eq!(hat.block_dims(), &[3, 3, 5, 3, 5]);
    assert!(conservation_defect(&hat) < tol(&c, -25));
}

// ---- deterministic change ----

#[test]
fn deterministic_change_structure() {
    let c = ctx();
    let entry = RealMatrix::from_rows(vec![vec![c.one()]]).unwrap();
    let post = RealMatrix::from_rows(vec![vec![c.one()]]).unwrap();
    let chain = build_deterministic_change(&c, 2, entry, post).unwrap();
    assert_eq!(chain.m_pre(), 2);
    assert!(chain.pre_block()[(0, 0)].is_zero());
    assert!((&chain.pre_block()[(0, 1)] - &c.one()).abs().is_zero());
    assert!(chain.pre_block()[(1, 0)].is_zero());
    assert!(chain.pre_block()[(1, 1)].is_zero());
    assert!((&chain.initial_law()[(0, 0)] - &c.one()).abs().is_zero());
}

#[test]
fn deterministic_change_pmf_is_point_mass() {
    let c = ctx();
    let entry = RealMatrix::from_rows(vec![vec![c.one()]]).unwrap();
    let post = RealMatrix::from_rows(vec![vec![c.one()]]).unwrap();
    for steps in [1usize, 3] {
        let chain = build_deterministic_change(&c, steps, entry.clone(), post.clone()).unwrap();
        for n in 0..6 {
            let p = chain.change_index_pmf(n);
            if n == steps {
                assert!((&p - &c.one()).abs() < tol(&c, -25));
            } else {
                assert!(p.abs() < tol(&c, -25));
            }
        }
    }
    // a change before any observation is not expressible this way
    assert!(build_deterministic_change(&c, 0, entry, post).is_err());
}

// ---- change-index law: analytic and simulated ----

/// Test-local walker over the environment chain at f64 resolution.
struct ChainWalker {
    init: Vec<f64>,
    rows: Vec<Vec<f64>>,
    m0: usize,
}

impl ChainWalker {
    fn new(chain: &ChangeChainSpec) -> Self {
        let n = chain.m_total();
        let p = chain.transition_matrix();
        let rows = (0..n)
            .map(|i| (0..n).map(|j| p[(i, j)].to_f64()).collect())
            .collect();
        let init = (0..n).map(|j| chain.initial_law()[(0, j)].to_f64()).collect();
        ChainWalker {
            init,
            rows,
            m0: chain.m_pre(),
        }
    }

    fn pick(table: &[f64], u: f64) -> usize {
        let mut acc = 0.0;
        for (idx, p) in table.iter().enumerate() {
            acc += p;
            if u < acc {
                return idx;
            }
        }
        table.len() - 1
    }

    fn draw_init<R: Rng>(&self, rng: &mut R) -> usize {
        Self::pick(&self.init, rng.gen::<f64>())
    }

    fn step<R: Rng>(&self, state: usize, rng: &mut R) -> usize {
        Self::pick(&self.rows[state], rng.gen::<f64>())
    }

    /// Number of pre-change states visited before entering the post class.
    fn draw_change_index<R: Rng>(&self, rng: &mut R) -> usize {
        let mut state = self.draw_init(rng);
        let mut count = 0;
        while state < self.m0 {
            count += 1;
            state = self.step(state, rng);
        }
        count
    }
}

#[test]
fn simulated_change_index_matches_pmf() {
    let c = ctx();
    let eps = c.parse("0.1").unwrap();
    let mu = c.parse("0.1").unwrap();
    let lam = c.parse("0.2").unwrap();
    let chain = bundle::contaminated_chain(&c, &eps, &mu, &lam).unwrap();
    // analytic law is zero-modified geometric
    let mu_f = 0.1f64;
    let lam_f = 0.2f64;
    for n in 0..8 {
        let want = if n == 0 {
            mu_f
        } else {
            (1.0 - mu_f) * (1.0 - lam_f).powi(n as i32 - 1) * lam_f
        };
        assert!((chain.change_index_pmf(n).to_f64() - want).abs() < 1e-14);
    }
    // chi-square on 1e5 draws, cells {0,…,9, ≥10}, 1% critical for 10 df
    let walker = ChainWalker::new(&chain);
    let mut rng = ChaCha12Rng::seed_from_u64(711);
    let n_draws = 100_000usize;
    let mut counts = [0u64; 11];
    for _ in 0..n_draws {
        let nu = walker.draw_change_index(&mut rng);
        counts[nu.min(10)] += 1;
    }
    let mut expected = [0.0f64; 11];
    let mut head = 0.0;
    for (n, e) in expected.iter_mut().enumerate().take(10) {
        let p = chain.change_index_pmf(n).to_f64();
        *e = p * n_draws as f64;
        head += p;
    }
    expected[10] = (1.0 - head) * n_draws as f64;
    let stat: f64 = counts
        .iter()
        .zip(expected.iter())
        .map(|(&o, &e)| (o as f64 - e).powi(2) / e)
        .sum();
    assert!(
        stat < 23.209,
        "chi-square statistic {stat} exceeds the 1% critical value"
    );
}

#[test]
fn deterministic_change_simulates_point_mass() {
    let c = ctx();
    let entry = RealMatrix::from_rows(vec![vec![c.one()]]).unwrap();
    let post = RealMatrix::from_rows(vec![vec![c.one()]]).unwrap();
    let chain = build_deterministic_change(&c, 3, entry, post).unwrap();
    let walker = ChainWalker::new(&chain);
    let mut rng = ChaCha12Rng::seed_from_u64(12);
    for _ in 0..1000 {
        assert_eq!(walker.draw_change_index(&mut rng), 3);
    }
}

// ---- hat chain preserves the observable law ----

#[test]
fn hat_chain_couples_to_identical_paths() {
    let c = ctx();
    let eps = c.parse("0.1").unwrap();
    let mu = c.parse("0.1").unwrap();
    let lam = c.parse("0.2").unwrap();
    let chain = bundle::contaminated_chain(&c, &eps, &mu, &lam).unwrap();
    let hat = build_hat_chain(&chain).unwrap();
    let regimes = bundle::contaminated_regimes(&c, Side::SpectrallyNegative).unwrap();
    let hat_regimes = regimes.hat_regimes();
    let m0 = chain.m_pre();
    let m1 = chain.m_post();

    // regime index attached to each state; copies shadow their originals
    let orig_regime = |s: usize| s;
    let hat_regime = |s: usize| if s < m0 + m1 { s } else { s - m1 };

    let all_orig: Vec<&PhaseTypeDist> =
        regimes.pre().iter().chain(regimes.post().iter()).collect();
    let all_hat: Vec<&PhaseTypeDist> = hat_regimes
        .pre()
        .iter()
        .chain(hat_regimes.post().iter())
        .collect();
    let samplers_orig: Vec<PhSampler> =
        all_orig.iter().map(|d| PhSampler::new(d).unwrap()).collect();
    let samplers_hat: Vec<PhSampler> =
        all_hat.iter().map(|d| PhSampler::new(d).unwrap()).collect();

    let w_orig = ChainWalker::new(&chain);
    let w_hat = ChainWalker::new(&hat);
    let steps = 12;
    for path in 0..10_000u64 {
        let mut rng_a = ChaCha12Rng::seed_from_u64(900 + path);
        let mut rng_b = ChaCha12Rng::seed_from_u64(900 + path);
        let mut s_a = w_orig.draw_init(&mut rng_a);
        let mut s_b = w_hat.draw_init(&mut rng_b);
        let mut nu_a = 0;
        let mut nu_b = 0;
        for step in 0..steps {
            assert_eq!(
                orig_regime(s_a),
                hat_regime(s_b),
                "regime sequences diverged at step {step} of path {path}"
            );
            if s_a < m0 {
                nu_a += 1;
            }
            if s_b < m0 {
                nu_b += 1;
            }
            let obs_a = samplers_orig[orig_regime(s_a)].draw(&mut rng_a);
            let obs_b = samplers_hat[s_b].draw(&mut rng_b);
            assert_eq!(obs_a.to_bits(), obs_b.to_bits());
            s_a = w_orig.step(s_a, &mut rng_a);
            s_b = w_hat.step(s_b, &mut rng_b);
        }
        assert_eq!(nu_a, nu_b);
    }
}

// ---- validation ----

#[test]
fn defective_regimes_are_rejected() {
    let c = ctx();
    let alpha = RealMatrix::from_rows(vec![vec![c.one()]]).unwrap();
    let t = RealMatrix::from_rows(vec![vec![c.parse("-1").unwrap()]]).unwrap();
    let exit = RealMatrix::from_rows(vec![vec![c.parse("0.5").unwrap()]]).unwrap();
    let kill = RealMatrix::from_rows(vec![vec![c.parse("0.5").unwrap()]]).unwrap();
    let defective = PhaseTypeDist::new(&c, alpha, t, Some(exit), Some(kill)).unwrap();
    assert!(defective.is_defective());
    match RegimeMap::new(vec![defective], vec![]) {
        Err(BuildError::Validation(_)) => {}
        other => panic!("expected validation error, got {other:?}"),
    }
}

#[test]
fn chain_validation_rejects_bad_rows() {
    let c = ctx();
    let k = RealMatrix::from_rows(vec![vec![c.parse("0.9").unwrap()]]).unwrap();
    let l = RealMatrix::from_rows(vec![vec![c.parse("0.2").unwrap()]]).unwrap();
    let m = RealMatrix::from_rows(vec![vec![c.one()]]).unwrap();
    let beta = RealMatrix::from_rows(vec![vec![c.one(), c.zero()]]).unwrap();
    match ChangeChainSpec::new(&c, k, l, m, beta) {
        Err(BuildError::Validation(msg)) => assert!(msg.contains("sum")),
        other => panic!("expected validation error, got {other:?}"),
    }
}

#[test]
fn jump_law_validation_and_transform() {
    let c = ctx();
    let bad = JumpLaw::Deterministic(c.parse("-1").unwrap());
    assert!(build_iid_map(
        &bundle::law_three_phase(&c),
        &c.one(),
        bad,
        Side::SpectrallyNegative
    )
    .is_err());
    let unbalanced = JumpLaw::FiniteDiscrete(vec![
        (c.one(), c.parse("0.4").unwrap()),
        (c.parse("2").unwrap(), c.parse("0.4").unwrap()),
    ]);
    assert!(build_iid_map(
        &bundle::law_three_phase(&c),
        &c.one(),
        unbalanced,
        Side::SpectrallyNegative
    )
    .is_err());
    // transform values
    let s = c.parse("0.3").unwrap();
    let det = JumpLaw::Deterministic(c.parse("2").unwrap());
    let want = (-(&s * &c.parse("2").unwrap())).exp();
    assert!((&det.laplace_transform(&s, &c) - &want).abs() < tol(&c, -25));
    let half = c.parse("0.5").unwrap();
    let mix = JumpLaw::FiniteDiscrete(vec![
        (c.one(), half.clone()),
        (c.parse("3").unwrap(), half.clone()),
    ]);
    let want = &(&half * &(-&s).exp()) + &(&half * &(-(&s * &c.parse("3").unwrap())).exp());
    assert!((&mix.laplace_transform(&s, &c) - &want).abs() < tol(&c, -25));
}
