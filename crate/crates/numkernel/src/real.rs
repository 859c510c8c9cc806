use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use rug::ops::CompleteRound;
use rug::Float;

use crate::NumError;

const LOG2_10: f64 = 3.321928094887362;

/// Guard bits added on top of the bits needed for the requested decimal
/// digits, so that a chain of elementary operations keeps relative error
/// comfortably below `10^(1-P)`.
const GUARD_BITS: u32 = 8;

/// A computation context: fixes the working precision in decimal digits.
///
/// All values created through a context carry `bits(P)` binary digits of
/// mantissa; arithmetic between two values is carried out at the larger of
/// the two precisions, so mixing contexts widens rather than truncates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ctx {
    digits: u32,
    bits: u32,
}

impl Ctx {
    /// Context with `digits` decimal digits of working precision.
    pub fn new(digits: u32) -> Self {
        let digits = digits.max(2);
        let bits = (digits as f64 * LOG2_10).ceil() as u32 + GUARD_BITS;
        Ctx { digits, bits }
    }

    /// The decimal precision P of this context.
    pub fn digits(&self) -> u32 {
        self.digits
    }

    /// The binary mantissa size backing P decimal digits.
    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// A context with `extra` additional decimal digits (for internal
    /// elevated-precision passes).
    pub fn widened(&self, extra: u32) -> Ctx {
        Ctx::new(self.digits + extra)
    }

    /// Context whose mantissa is exactly `bits` wide; the decimal precision
    /// is derived conservatively.  Used to adopt the precision of existing
    /// values.
    pub fn from_bits(bits: u32) -> Ctx {
        let bits = bits.max(16);
        let digits = (((bits - GUARD_BITS.min(bits - 8)) as f64) / LOG2_10).floor() as u32;
        Ctx {
            digits: digits.max(2),
            bits,
        }
    }

    pub fn zero(&self) -> Real {
        Real(Float::with_val(self.bits, 0))
    }

    pub fn one(&self) -> Real {
        Real(Float::with_val(self.bits, 1))
    }

    pub fn from_u64(&self, v: u64) -> Real {
        Real(Float::with_val(self.bits, v))
    }

    pub fn from_i64(&self, v: i64) -> Real {
        Real(Float::with_val(self.bits, v))
    }

    /// Exact embedding of an `f64` (the value, not its decimal rendering).
    pub fn from_f64(&self, v: f64) -> Real {
        Real(Float::with_val(self.bits, v))
    }

    /// Parse a decimal literal (plain or scientific) at context precision.
    pub fn parse(&self, s: &str) -> Result<Real, NumError> {
        let s = s.trim();
        let incomplete =
            Float::parse(s).map_err(|e| NumError::ParseReal(format!("{s:?}: {e}")))?;
        let v = incomplete.complete(self.bits);
        if !v.is_finite() {
            return Err(NumError::ParseReal(format!("{s:?}: not finite")));
        }
        Ok(Real(v))
    }
}

/// An arbitrary-precision real number.
///
/// Thin wrapper over an MPFR float; immutable value semantics, deterministic
/// round-to-nearest arithmetic.
#[derive(Debug, Clone)]
pub struct Real(pub(crate) Float);

impl Real {
    pub fn prec_bits(&self) -> u32 {
        self.0.prec()
    }

    /// Decimal digits corresponding to this value's mantissa size (inverse of
    /// the context mapping).
    pub fn prec_digits(&self) -> u32 {
        (((self.0.prec().saturating_sub(GUARD_BITS)) as f64) / LOG2_10).round() as u32
    }

    /// Copy of this value at a different mantissa width; exact when
    /// widening, round-to-nearest when narrowing.
    pub fn with_prec_bits(&self, bits: u32) -> Real {
        let mut f = self.0.clone();
        f.set_prec(bits);
        Real(f)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_finite(&self) -> bool {
        self.0.is_finite()
    }

    pub fn is_sign_negative(&self) -> bool {
        self.0.is_sign_negative() && !self.0.is_zero()
    }

    pub fn abs(&self) -> Real {
        Real(self.0.clone().abs())
    }

    pub fn ln(&self) -> Real {
        Real(self.0.clone().ln())
    }

    pub fn exp(&self) -> Real {
        Real(self.0.clone().exp())
    }

    pub fn sqrt(&self) -> Real {
        Real(self.0.clone().sqrt())
    }

    pub fn floor(&self) -> Real {
        Real(self.0.clone().floor())
    }

    /// `self^k` by binary exponentiation at the value's own precision.
    pub fn powi(&self, k: u32) -> Real {
        use rug::ops::Pow;
        Real(self.0.clone().pow(k))
    }

    /// Power of ten at this value's precision: `10^e`.
    pub fn pow10(e: i32, at: &Real) -> Real {
        use rug::ops::Pow;
        let ten = Float::with_val(at.prec_bits(), 10);
        Real(ten.pow(e))
    }

    pub fn recip(&self) -> Real {
        Real(self.0.clone().recip())
    }

    pub fn max(&self, other: &Real) -> Real {
        if self >= other {
            self.clone()
        } else {
            other.clone()
        }
    }

    pub fn min(&self, other: &Real) -> Real {
        if self <= other {
            self.clone()
        } else {
            other.clone()
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64()
    }

    /// Nearest integer below, as i64. Exact for magnitudes below 2^53 (the
    /// floor is taken at full precision before the conversion).
    pub fn floor_i64(&self) -> i64 {
        self.0.clone().floor().to_f64() as i64
    }

    /// Decimal-string rendering with `digits` significant digits, scientific
    /// form, deterministic across platforms.
    pub fn to_decimal_string(&self, digits: u32) -> String {
        format!("{:.*e}", digits.saturating_sub(1) as usize, self.0)
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = self.prec_digits().clamp(6, 50) as usize;
        write!(f, "{:.*e}", d.saturating_sub(1), self.0)
    }
}

impl PartialEq for Real {
    fn eq(&self, other: &Self) -> bool {
        self.0 == other.0
    }
}

impl PartialOrd for Real {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.0.partial_cmp(&other.0)
    }
}

fn join_prec(a: &Float, b: &Float) -> u32 {
    a.prec().max(b.prec())
}

macro_rules! binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait<&Real> for &Real {
            type Output = Real;
            fn $method(self, rhs: &Real) -> Real {
                let p = join_prec(&self.0, &rhs.0);
                Real(Float::with_val(p, &self.0 $op &rhs.0))
            }
        }
        impl $trait<Real> for Real {
            type Output = Real;
            fn $method(self, rhs: Real) -> Real {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&Real> for Real {
            type Output = Real;
            fn $method(self, rhs: &Real) -> Real {
                (&self).$method(rhs)
            }
        }
        impl $trait<Real> for &Real {
            type Output = Real;
            fn $method(self, rhs: Real) -> Real {
                self.$method(&rhs)
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);
binop!(Div, div, /);

impl Neg for &Real {
    type Output = Real;
    fn neg(self) -> Real {
        Real(-self.0.clone())
    }
}

impl Neg for Real {
    type Output = Real;
    fn neg(self) -> Real {
        Real(-self.0)
    }
}

impl AddAssign<&Real> for Real {
    fn add_assign(&mut self, rhs: &Real) {
        if rhs.0.prec() > self.0.prec() {
            let p = rhs.0.prec();
            self.0.set_prec(p);
        }
        self.0 += &rhs.0;
    }
}

impl SubAssign<&Real> for Real {
    fn sub_assign(&mut self, rhs: &Real) {
        if rhs.0.prec() > self.0.prec() {
            let p = rhs.0.prec();
            self.0.set_prec(p);
        }
        self.0 -= &rhs.0;
    }
}

impl MulAssign<&Real> for Real {
    fn mul_assign(&mut self, rhs: &Real) {
        if rhs.0.prec() > self.0.prec() {
            let p = rhs.0.prec();
            self.0.set_prec(p);
        }
        self.0 *= &rhs.0;
    }
}

impl Real {
    /// Fused accumulate: `self += a * b`, rounded once at `self`'s precision.
    pub fn add_mul(&mut self, a: &Real, b: &Real) {
        self.0 += &a.0 * &b.0;
    }

    /// Change the mantissa size in place (rounding to nearest if narrowing).
    pub fn set_prec_bits(&mut self, bits: u32) {
        self.0.set_prec(bits);
    }
}

// ---- tests ----

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_round_trip_keeps_thirty_digits() {
        let ctx = Ctx::new(30);
        let x = ctx.parse("0.123456789012345678901234567891").unwrap();
        let s = x.to_decimal_string(30);
        let y = ctx.parse(&s).unwrap();
        let rel = ((&x - &y) / &x).abs();
        let bound = ctx.parse("1e-29").unwrap();
        assert!(rel < bound, "round trip drifted by {rel}");
    }

    #[test]
    fn arithmetic_joins_precision() {
        let lo = Ctx::new(10);
        let hi = Ctx::new(40);
        let a = lo.parse("1.5").unwrap();
        let b = hi.parse("2.25").unwrap();
        let c = &a + &b;
        assert_eq!(c.prec_bits(), b.prec_bits());
        assert_eq!(c.to_f64(), 3.75);
    }

    #[test]
    fn relative_error_within_contract() {
        // one elementary op at P digits keeps relative error below 10^(1-P)
        let ctx = Ctx::new(30);
        let a = ctx.parse("1e10").unwrap();
        let b = ctx.parse("3.0").unwrap();
        let q = &a / &b;
        let back = &q * &b;
        let rel = (&(&back - &a) / &a).abs();
        assert!(rel < Real::pow10(-29, &rel));
    }
}
