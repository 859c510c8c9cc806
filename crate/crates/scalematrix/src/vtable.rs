use numkernel::{mat_norm_inf, Ctx, RealMatrix};

use crate::ScaleError;

// ---- coefficient table ----

/// Two-index table of series coefficients.
///
/// `V(n, k)` is the sum of all ordered products of `n` factors drawn from
/// the pair `(T, B)` in which exactly `k − 1` factors are `B` — equivalently
/// the coefficient matrices generated by
///
/// ```text
/// V(0, 1) = I,   V(0, k) = 0 for k > 1,
/// V(n, k) = T·V(n−1, k) + B·V(n−1, k−1).
/// ```
///
/// `V(n, k)` vanishes whenever `n < k − 1` (not enough factors to hold the
/// required `B`s) and `V(n, 1) = Tⁿ`.  Tables are immutable once built;
/// [`grown`](VTable::grown) produces an enlarged copy reusing existing
/// entries.
#[derive(Debug, Clone)]
pub struct VTable {
    ctx: Ctx,
    t_mod: RealMatrix,
    b_mod: RealMatrix,
    n_max: usize,
    k_max: usize,
    // rows[n][k-1]; entries with n < k-1 are present but zero
    rows: Vec<Vec<RealMatrix>>,
    // ∞-norm of each entry, same layout; cheap magnitude bookkeeping for
    // truncation and cancellation diagnostics during series evaluation
    norms: Vec<Vec<f64>>,
}

/// Builds the table for `0 ≤ n ≤ n_max`, `1 ≤ k ≤ k_max` by the recursion.
pub fn vtable_build(
    t_mod: &RealMatrix,
    b_mod: &RealMatrix,
    n_max: usize,
    k_max: usize,
) -> Result<VTable, ScaleError> {
    if !t_mod.is_square() || !b_mod.is_square() || t_mod.nrows() != b_mod.nrows() {
        return Err(ScaleError::DimensionMismatch(format!(
            "coefficient table needs equal square bases, got {}x{} and {}x{}",
            t_mod.nrows(),
            t_mod.ncols(),
            b_mod.nrows(),
            b_mod.ncols()
        )));
    }
    if k_max == 0 {
        return Err(ScaleError::Validation(
            "table needs at least one column".into(),
        ));
    }
    let ctx = Ctx::from_bits(t_mod.prec_bits().max(b_mod.prec_bits()));
    let mut table = VTable {
        ctx,
        t_mod: t_mod.clone(),
        b_mod: b_mod.clone(),
        n_max: 0,
        k_max,
        rows: Vec::with_capacity(n_max + 1),
        norms: Vec::with_capacity(n_max + 1),
    };
    let base = table.base_row();
    table.norms.push(base.iter().map(entry_norm).collect());
    table.rows.push(base);
    table.extend_rows(n_max)?;
    Ok(table)
}

impl VTable {
    fn base_row(&self) -> Vec<RealMatrix> {
        let n = self.t_mod.nrows();
        let mut row = Vec::with_capacity(self.k_max);
        row.push(RealMatrix::identity(n, &self.ctx));
        for _ in 1..self.k_max {
            row.push(RealMatrix::zeros(n, n, &self.ctx));
        }
        row
    }

    fn extend_rows(&mut self, n_max: usize) -> Result<(), ScaleError> {
        while self.n_max < n_max {
            let prev = &self.rows[self.n_max];
            let mut next = Vec::with_capacity(self.k_max);
            for k in 1..=self.k_max {
                let mut m = self.t_mod.matmul(&prev[k - 1])?;
                if k >= 2 {
                    m = &m + &self.b_mod.matmul(&prev[k - 2])?;
                }
                next.push(m);
            }
            self.norms.push(next.iter().map(entry_norm).collect());
            self.rows.push(next);
            self.n_max += 1;
        }
        Ok(())
    }

    /// Enlarged copy covering at least (`n_max`, `k_max`), reusing entries.
    pub fn grown(&self, n_max: usize, k_max: usize) -> Result<VTable, ScaleError> {
        let mut out = self.clone();
        if k_max > out.k_max {
            // widen every existing row left to right; column k of row n
            // needs columns k and k-1 of row n-1, already present
            for n in 0..=out.n_max {
                for k in (out.k_max + 1)..=k_max {
                    let m = if n == 0 {
                        let dim = out.t_mod.nrows();
                        RealMatrix::zeros(dim, dim, &out.ctx)
                    } else {
                        let t_part = out.t_mod.matmul(&out.rows[n - 1][k - 1])?;
                        let b_part = out.b_mod.matmul(&out.rows[n - 1][k - 2])?;
                        &t_part + &b_part
                    };
                    out.norms[n].push(entry_norm(&m));
                    out.rows[n].push(m);
                }
            }
            out.k_max = k_max;
        }
        out.extend_rows(n_max.max(out.n_max))?;
        Ok(out)
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    /// Phase dimension of the base matrices.
    pub fn n_dim(&self) -> usize {
        self.t_mod.nrows()
    }

    pub fn t_mod(&self) -> &RealMatrix {
        &self.t_mod
    }

    pub fn b_mod(&self) -> &RealMatrix {
        &self.b_mod
    }

    /// Precision (bits) of the table entries.
    pub fn prec_bits(&self) -> u32 {
        self.t_mod.prec_bits()
    }

    /// Working context of the table entries.
    pub fn ctx(&self) -> &Ctx {
        &self.ctx
    }

    /// Coefficient `V(n, k)`; `1 ≤ k ≤ k_max`, `n ≤ n_max`.
    pub fn get(&self, n: usize, k: usize) -> &RealMatrix {
        &self.rows[n][k - 1]
    }

    /// ∞-norm of `V(n, k)` as a double, for magnitude bookkeeping.
    pub fn norm_inf(&self, n: usize, k: usize) -> f64 {
        self.norms[n][k - 1]
    }

    /// True when `V(n, k)` is structurally zero (`n < k − 1`).
    pub fn is_structural_zero(n: usize, k: usize) -> bool {
        n + 1 < k
    }
}

fn entry_norm(m: &RealMatrix) -> f64 {
    mat_norm_inf(m).to_f64()
}
