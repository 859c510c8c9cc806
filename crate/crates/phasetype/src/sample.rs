use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::dist::PhaseTypeDist;
use crate::PhError;

/// Precomputed double-precision tables for drawing absorption times of a
/// non-defective phase-type law. Construction converts the representation
/// once; draws then cost a few uniforms each.
#[derive(Debug, Clone)]
pub struct PhSampler {
    init_cdf: Vec<f64>,
    rates: Vec<f64>,
    /// Per state: cumulative branch table. Entry 0 is the absorption
    /// probability t_i/rate_i; entries 1.. accumulate the jump probabilities
    /// T_ij/rate_i for j != i in column order.
    branch_cdf: Vec<Vec<f64>>,
    branch_target: Vec<Vec<usize>>,
}

impl PhSampler {
    pub fn new(d: &PhaseTypeDist) -> Result<Self, PhError> {
        if d.is_defective() {
            return Err(PhError::Defective(
                "sampling requires zero kill rates".into(),
            ));
        }
        let n = d.n_phases();
        let mut init_cdf = Vec::with_capacity(n);
        let mut acc = 0.0;
        for j in 0..n {
            acc += d.alpha()[(0, j)].to_f64();
            init_cdf.push(acc);
        }
        let mut rates = Vec::with_capacity(n);
        let mut branch_cdf = Vec::with_capacity(n);
        let mut branch_target = Vec::with_capacity(n);
        for i in 0..n {
            let rate = -d.t_matrix()[(i, i)].to_f64();
            rates.push(rate);
            let mut cdf = vec![d.exit_rates()[(i, 0)].to_f64() / rate];
            let mut tgt = vec![usize::MAX];
            let mut run = cdf[0];
            for j in 0..n {
                if j != i {
                    run += d.t_matrix()[(i, j)].to_f64() / rate;
                    cdf.push(run);
                    tgt.push(j);
                }
            }
            branch_cdf.push(cdf);
            branch_target.push(tgt);
        }
        Ok(PhSampler {
            init_cdf,
            rates,
            branch_cdf,
            branch_target,
        })
    }

    fn pick(cdf: &[f64], u: f64) -> usize {
        for (k, c) in cdf.iter().enumerate() {
            if u < *c {
                return k;
            }
        }
        cdf.len() - 1
    }

    /// Draws one absorption time by simulating the phase chain: exponential
    /// holding times via inverse CDF, then either absorption or an embedded
    /// jump.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let mut state = Self::pick(&self.init_cdf, rng.gen::<f64>());
        let mut time = 0.0;
        loop {
            let u: f64 = rng.gen();
            time += -(1.0 - u).ln() / self.rates[state];
            let branch = Self::pick(&self.branch_cdf[state], rng.gen::<f64>());
            if branch == 0 {
                return time;
            }
            state = self.branch_target[state][branch];
        }
    }
}

/// Draws a single absorption time from a fixed seed. Reproducible: the same
/// seed always yields the same value.
pub fn sample(d: &PhaseTypeDist, rng_seed: u64) -> Result<f64, PhError> {
    let sampler = PhSampler::new(d)?;
    let mut rng = ChaCha12Rng::seed_from_u64(rng_seed);
    Ok(sampler.draw(&mut rng))
}

// ---- tests ----
