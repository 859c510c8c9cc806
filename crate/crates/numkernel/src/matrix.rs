use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use crate::real::{Ctx, Real};
use crate::NumError;

/// Dense row-major matrix of arbitrary-precision reals.
///
/// Row and column vectors are 1×n and n×1 matrices; there is no separate
/// vector type.
#[derive(Debug, Clone, PartialEq)]
pub struct RealMatrix {
    nrows: usize,
    ncols: usize,
    data: Vec<Real>,
}

impl RealMatrix {
    pub fn zeros(nrows: usize, ncols: usize, ctx: &Ctx) -> Self {
        assert!(nrows > 0 && ncols > 0, "dimensions must be positive");
        RealMatrix {
            nrows,
            ncols,
            data: vec![ctx.zero(); nrows * ncols],
        }
    }

    pub fn identity(n: usize, ctx: &Ctx) -> Self {
        let mut m = Self::zeros(n, n, ctx);
        for i in 0..n {
            m[(i, i)] = ctx.one();
        }
        m
    }

    /// Build from nested rows; all rows must share one length.
    pub fn from_rows(rows: Vec<Vec<Real>>) -> Result<Self, NumError> {
        let nrows = rows.len();
        if nrows == 0 {
            return Err(NumError::DimensionMismatch("no rows".into()));
        }
        let ncols = rows[0].len();
        if ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
            return Err(NumError::DimensionMismatch(
                "rows must be non-empty and of equal length".into(),
            ));
        }
        Ok(RealMatrix {
            nrows,
            ncols,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn is_square(&self) -> bool {
        self.nrows == self.ncols
    }

    /// Largest mantissa size among entries (the matrix's working precision).
    pub fn prec_bits(&self) -> u32 {
        self.data.iter().map(Real::prec_bits).max().unwrap_or(53)
    }

    /// Round every entry to `bits` mantissa bits, in place.
    pub fn set_prec_bits(&mut self, bits: u32) {
        for e in &mut self.data {
            e.set_prec_bits(bits);
        }
    }

    pub fn transpose(&self) -> RealMatrix {
        let mut out = RealMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            data: self.data.clone(),
        };
        for i in 0..self.nrows {
            for j in 0..self.ncols {
                out.data[j * self.nrows + i] = self[(i, j)].clone();
            }
        }
        out
    }

    pub fn scale(&self, s: &Real) -> RealMatrix {
        let mut out = self.clone();
        for e in &mut out.data {
            *e = &*e * s;
        }
        out
    }

    /// `self + s * other`, entrywise.
    pub fn add_scaled(&self, other: &RealMatrix, s: &Real) -> Result<RealMatrix, NumError> {
        self.check_same_shape(other)?;
        let mut out = self.clone();
        for (e, o) in out.data.iter_mut().zip(other.data.iter()) {
            e.add_mul(o, s);
        }
        Ok(out)
    }

    /// In-place `self += s * other` (shape-checked).
    pub fn accumulate_scaled(&mut self, other: &RealMatrix, s: &Real) -> Result<(), NumError> {
        self.check_same_shape(other)?;
        for (e, o) in self.data.iter_mut().zip(other.data.iter()) {
            e.add_mul(o, s);
        }
        Ok(())
    }

    fn check_same_shape(&self, other: &RealMatrix) -> Result<(), NumError> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(NumError::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.nrows, self.ncols, other.nrows, other.ncols
            )));
        }
        Ok(())
    }

    pub fn matmul(&self, rhs: &RealMatrix) -> Result<RealMatrix, NumError> {
        if self.ncols != rhs.nrows {
            return Err(NumError::DimensionMismatch(format!(
                "{}x{} * {}x{}",
                self.nrows, self.ncols, rhs.nrows, rhs.ncols
            )));
        }
        let p = self.prec_bits().max(rhs.prec_bits());
        let mut out = RealMatrix {
            nrows: self.nrows,
            ncols: rhs.ncols,
            data: Vec::with_capacity(self.nrows * rhs.ncols),
        };
        for i in 0..self.nrows {
            for j in 0..rhs.ncols {
                let mut acc = Real(rug::Float::with_val(p, 0));
                for l in 0..self.ncols {
                    acc.add_mul(&self[(i, l)], &rhs[(l, j)]);
                }
                out.data.push(acc);
            }
        }
        Ok(out)
    }

    /// Column vector of row sums.
    pub fn row_sums(&self) -> RealMatrix {
        let p = self.prec_bits();
        let mut out = RealMatrix {
            nrows: self.nrows,
            ncols: 1,
            data: Vec::with_capacity(self.nrows),
        };
        for i in 0..self.nrows {
            let mut acc = Real(rug::Float::with_val(p, 0));
            for j in 0..self.ncols {
                acc += &self[(i, j)];
            }
            out.data.push(acc);
        }
        out
    }

    /// The single entry of a 1×1 matrix.
    pub fn scalar(&self) -> &Real {
        assert!(
            self.nrows == 1 && self.ncols == 1,
            "scalar() on {}x{} matrix",
            self.nrows,
            self.ncols
        );
        &self.data[0]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Real> {
        self.data.iter()
    }

    /// Entrywise maximum absolute difference against another matrix.
    pub fn max_abs_diff(&self, other: &RealMatrix) -> Result<Real, NumError> {
        self.check_same_shape(other)?;
        let p = self.prec_bits().max(other.prec_bits());
        let mut best = Real(rug::Float::with_val(p, 0));
        for (a, b) in self.data.iter().zip(other.data.iter()) {
            let d = (a - b).abs();
            if d > best {
                best = d;
            }
        }
        Ok(best)
    }
}

impl Index<(usize, usize)> for RealMatrix {
    type Output = Real;
    fn index(&self, (i, j): (usize, usize)) -> &Real {
        &self.data[i * self.ncols + j]
    }
}

impl IndexMut<(usize, usize)> for RealMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Real {
        &mut self.data[i * self.ncols + j]
    }
}

impl Add<&RealMatrix> for &RealMatrix {
    type Output = RealMatrix;
    fn add(self, rhs: &RealMatrix) -> RealMatrix {
        self.check_same_shape(rhs).expect("matrix add");
        let mut out = self.clone();
        for (e, o) in out.data.iter_mut().zip(rhs.data.iter()) {
            *e += o;
        }
        out
    }
}

impl Sub<&RealMatrix> for &RealMatrix {
    type Output = RealMatrix;
    fn sub(self, rhs: &RealMatrix) -> RealMatrix {
        self.check_same_shape(rhs).expect("matrix sub");
        let mut out = self.clone();
        for (e, o) in out.data.iter_mut().zip(rhs.data.iter()) {
            *e -= o;
        }
        out
    }
}

impl Mul<&RealMatrix> for &RealMatrix {
    type Output = RealMatrix;
    fn mul(self, rhs: &RealMatrix) -> RealMatrix {
        self.matmul(rhs).expect("matrix mul")
    }
}

impl fmt::Display for RealMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.nrows {
            for j in 0..self.ncols {
                if j > 0 {
                    write!(f, "  ")?;
                }
                write!(f, "{}", self[(i, j)])?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

// ---- tests ----

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_small() {
        let ctx = Ctx::new(20);
        let a = RealMatrix::from_rows(vec![
            vec![ctx.from_i64(1), ctx.from_i64(2)],
            vec![ctx.from_i64(3), ctx.from_i64(4)],
        ])
        .unwrap();
        let b = RealMatrix::identity(2, &ctx);
        assert_eq!(a.matmul(&b).unwrap(), a);
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let ctx = Ctx::new(20);
        let a = RealMatrix::zeros(2, 3, &ctx);
        let b = RealMatrix::zeros(2, 3, &ctx);
        assert!(matches!(
            a.matmul(&b),
            Err(NumError::DimensionMismatch(_))
        ));
    }
}
