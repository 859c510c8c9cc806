use crate::real::{Ctx, Real};
use crate::{NumError, RealMatrix};

/// ∞-norm: max over rows of the sum of absolute entries.
pub fn mat_norm_inf(m: &RealMatrix) -> Real {
    let p = m.prec_bits();
    let mut best = Real(rug::Float::with_val(p, 0));
    for i in 0..m.nrows() {
        let mut acc = Real(rug::Float::with_val(p, 0));
        for j in 0..m.ncols() {
            acc += &m[(i, j)].abs();
        }
        if acc > best {
            best = acc;
        }
    }
    best
}

/// LU factorization with partial pivoting, kept private to this module.
struct Lu {
    /// Combined L (unit lower, below diagonal) and U (upper) factors.
    lu: RealMatrix,
    /// Row permutation: `perm[k]` is the original row now in position k.
    perm: Vec<usize>,
}

/// Relative pivot threshold: a pivot below `10^(10-P)` times the largest
/// initial magnitude in its column marks the matrix singular at precision P.
fn pivot_threshold(m: &RealMatrix, digits: u32) -> Vec<Real> {
    let tol = Real::pow10(10 - digits as i32, &m[(0, 0)]);
    (0..m.ncols())
        .map(|j| {
            let mut colmax = m[(0, j)].abs();
            for i in 1..m.nrows() {
                let a = m[(i, j)].abs();
                if a > colmax {
                    colmax = a;
                }
            }
            &colmax * &tol
        })
        .collect()
}

fn lu_factor(m: &RealMatrix, digits: u32) -> Result<Lu, NumError> {
    let n = m.nrows();
    let thresholds = pivot_threshold(m, digits);
    let mut lu = m.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        // pivot selection: largest magnitude in column k at or below the diagonal
        let mut pivot_row = k;
        let mut pivot_mag = lu[(k, k)].abs();
        for i in k + 1..n {
            let mag = lu[(i, k)].abs();
            if mag > pivot_mag {
                pivot_mag = mag;
                pivot_row = i;
            }
        }
        if pivot_mag <= thresholds[k] {
            return Err(NumError::SingularMatrix(format!(
                "pivot {pivot_mag} in column {k} below threshold {}",
                thresholds[k]
            )));
        }
        if pivot_row != k {
            for j in 0..n {
                let a = lu[(k, j)].clone();
                let b = lu[(pivot_row, j)].clone();
                lu[(k, j)] = b;
                lu[(pivot_row, j)] = a;
            }
            perm.swap(k, pivot_row);
        }
        let inv_pivot = lu[(k, k)].recip();
        for i in k + 1..n {
            let factor = &lu[(i, k)] * &inv_pivot;
            for j in k + 1..n {
                let sub = &lu[(k, j)] * &factor;
                let e = &lu[(i, j)] - &sub;
                lu[(i, j)] = e;
            }
            lu[(i, k)] = factor;
        }
    }
    Ok(Lu { lu, perm })
}

impl Lu {
    /// Solve for one right-hand-side column already permuted into `b`.
    fn solve_in_place(&self, b: &mut [Real]) {
        let n = self.perm.len();
        // forward substitution with unit lower factor
        for i in 1..n {
            for j in 0..i {
                let sub = &self.lu[(i, j)] * &b[j];
                b[i] -= &sub;
            }
        }
        // back substitution with upper factor
        for i in (0..n).rev() {
            for j in i + 1..n {
                let sub = &self.lu[(i, j)] * &b[j];
                b[i] -= &sub;
            }
            b[i] = &b[i] / &self.lu[(i, i)];
        }
    }
}

/// Solve `m · x = rhs` (multiple right-hand sides as columns).
pub fn mat_solve(m: &RealMatrix, rhs: &RealMatrix) -> Result<RealMatrix, NumError> {
    if !m.is_square() {
        return Err(NumError::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if rhs.nrows() != m.nrows() {
        return Err(NumError::DimensionMismatch(format!(
            "{}x{} \\ {}x{}",
            m.nrows(),
            m.ncols(),
            rhs.nrows(),
            rhs.ncols()
        )));
    }
    let digits = digits_of(m);
    let lu = lu_factor(m, digits)?;
    let n = m.nrows();
    let mut out = rhs.clone();
    for j in 0..rhs.ncols() {
        let mut col: Vec<Real> = (0..n).map(|i| rhs[(lu.perm[i], j)].clone()).collect();
        lu.solve_in_place(&mut col);
        for (i, v) in col.into_iter().enumerate() {
            out[(i, j)] = v;
        }
    }
    Ok(out)
}

/// Matrix inverse by LU with partial pivoting.
///
/// The result is residual-checked: `‖m·m⁻¹ − I‖∞ ≤ 10^(8−P)·‖m‖∞` must hold
/// or the matrix is reported singular at the working precision.
pub fn mat_inverse(m: &RealMatrix) -> Result<RealMatrix, NumError> {
    if !m.is_square() {
        return Err(NumError::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    let digits = digits_of(m);
    let ctx = Ctx::new(digits);
    let inv = mat_solve(m, &RealMatrix::identity(m.nrows(), &ctx))?;
    let residual = mat_norm_inf(&(&m.matmul(&inv)? - &RealMatrix::identity(m.nrows(), &ctx)));
    let bound = &mat_norm_inf(m) * &Real::pow10(8 - digits as i32, &residual);
    if residual > bound {
        return Err(NumError::SingularMatrix(format!(
            "inverse residual {residual} exceeds bound {bound} at P={digits}"
        )));
    }
    Ok(inv)
}

fn digits_of(m: &RealMatrix) -> u32 {
    m.iter().map(Real::prec_digits).max().unwrap_or(30).max(2)
}

/// Matrix exponential by scaling-and-squaring with a relative-tolerance
/// Taylor tail: terms stop once the next term's ∞-norm falls below
/// `10^(−P)` times the partial sum's norm.
pub fn mat_exp(m: &RealMatrix) -> Result<RealMatrix, NumError> {
    if !m.is_square() {
        return Err(NumError::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    let n = m.nrows();
    let target_bits = m.prec_bits();
    let digits = digits_of(m);

    // squaring count: bring the scaled norm at or below 1/2
    let norm = mat_norm_inf(m).to_f64();
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };

    // elevated working precision absorbs the squaring error amplification
    if squarings > 200 {
        return Err(NumError::SingularMatrix(format!(
            "matrix norm {norm:e} too large for the exponential"
        )));
    }
    let work = Ctx::new(digits + 10 + squarings);
    let mut a = m.clone();
    a.set_prec_bits(work.bits());
    if squarings > 0 {
        let inv = work.from_u64(2).powi(squarings).recip();
        a = a.scale(&inv);
    }

    let tol = Real::pow10(-(digits as i32), &work.one());
    let mut sum = RealMatrix::identity(n, &work);
    let mut term = RealMatrix::identity(n, &work);
    let mut k = 1u64;
    loop {
        term = term.matmul(&a)?;
        let inv_k = work.from_u64(k).recip();
        term = term.scale(&inv_k);
        sum = &sum + &term;
        let term_norm = mat_norm_inf(&term);
        let sum_norm = mat_norm_inf(&sum);
        if term_norm < &tol * &sum_norm {
            break;
        }
        k += 1;
        if k > 10_000 {
            return Err(NumError::SingularMatrix(
                "matrix exponential series failed to converge".into(),
            ));
        }
    }
    for _ in 0..squarings {
        sum = sum.matmul(&sum)?;
    }
    sum.set_prec_bits(target_bits);
    Ok(sum)
}

// ---- tests ----
