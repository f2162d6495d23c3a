use std::fmt::{Debug, Display};
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num::{BigInt, BigRational, FromPrimitive, ToPrimitive, Zero};

/// Scalar used for costs: exact rationals or floats with a small slack.
pub trait Weight:
    Clone
    + Debug
    + Display
    + FromStr
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
    + 'static
{
    fn zero() -> Self;
    /// Exact for dyadic inputs in rational mode.
    fn from_f64(x: f64) -> Self;
    fn from_ratio(num: i64, den: i64) -> Self;
    fn to_f64(&self) -> f64;
    fn div_int(&self, k: usize) -> Self;
    /// Comparison slack: 0 in rational mode.
    fn slack() -> Self;

    fn le_tol(&self, other: &Self) -> bool {
        *self <= other.clone() + Self::slack()
    }

    fn lt_tol(&self, other: &Self) -> bool {
        self.clone() + Self::slack() < *other
    }

    fn is_zero_tol(&self) -> bool {
        self.le_tol(&Self::zero()) && Self::zero().le_tol(self)
    }

    fn min_of(a: Self, b: Self) -> Self {
        if b < a {
            b
        } else {
            a
        }
    }
}

impl Weight for f64 {
    fn zero() -> Self {
        0.0
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn div_int(&self, k: usize) -> Self {
        self / k as f64
    }
    fn slack() -> Self {
        1e-12
    }
}

impl Weight for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).expect("finite weight")
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn div_int(&self, k: usize) -> Self {
        self / BigInt::from_usize(k).expect("usize fits")
    }
    fn slack() -> Self {
        Zero::zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_round_trip() {
        let a = <BigRational as Weight>::from_ratio(3, 7);
        let s = a.to_string();
        assert_eq!(s, "3/7");
        assert_eq!(s.parse::<BigRational>().unwrap(), a);
        assert_eq!(<BigRational as Weight>::from_f64(0.125), <BigRational as Weight>::from_ratio(1, 8));
        assert!(!a.is_zero_tol() && (a.clone() - a).is_zero_tol());
    }

    #[test]
    fn float_slack() {
        assert!(1.0.le_tol(&(1.0 - 1e-13)));
        assert!(!1.0.lt_tol(&(1.0 + 1e-13)));
    }
}
