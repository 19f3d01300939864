use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{Num, ToPrimitive};

/// Exact, totally ordered numbers usable as plan costs.
///
/// Costs are compared without tolerance, so only exact types implement this:
/// machine integers, big integers, and rationals over either.
pub trait Scalar: Num + Clone + Ord + Debug + Display + Send + Sync + 'static {
    fn from_count(n: u64) -> Self;

    /// Converts an exact integer, or `None` when it does not fit.
    fn from_big(n: &BigInt) -> Option<Self>;

    /// Converts an exact rational, or `None` when it is not representable.
    fn from_rational(r: &BigRational) -> Option<Self> {
        if r.is_integer() {
            Self::from_big(&r.to_integer())
        } else {
            None
        }
    }

    /// Lossy view for summaries and plots; never used in comparisons.
    fn to_f64(&self) -> f64;
}

macro_rules! machine_int {
    ($($t:ty),*) => {$(
        impl Scalar for $t {
            fn from_count(n: u64) -> Self {
                n as $t
            }
            fn from_big(n: &BigInt) -> Option<Self> {
                <$t>::try_from(n).ok()
            }
            fn to_f64(&self) -> f64 {
                *self as f64
            }
        }
    )*};
}

machine_int!(u64, u128, i64, i128);

impl Scalar for BigInt {
    fn from_count(n: u64) -> Self {
        BigInt::from(n)
    }
    fn from_big(n: &BigInt) -> Option<Self> {
        Some(n.clone())
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::INFINITY)
    }
}

impl Scalar for Ratio<i64> {
    fn from_count(n: u64) -> Self {
        Ratio::from_integer(n as i64)
    }
    fn from_big(n: &BigInt) -> Option<Self> {
        i64::try_from(n).ok().map(Ratio::from_integer)
    }
    fn from_rational(r: &BigRational) -> Option<Self> {
        let n = i64::try_from(r.numer()).ok()?;
        let d = i64::try_from(r.denom()).ok()?;
        Some(Ratio::new(n, d))
    }
    fn to_f64(&self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }
}

impl Scalar for BigRational {
    fn from_count(n: u64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }
    fn from_big(n: &BigInt) -> Option<Self> {
        Some(BigRational::from_integer(n.clone()))
    }
    fn from_rational(r: &BigRational) -> Option<Self> {
        Some(r.clone())
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::INFINITY)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roundtrip<S: Scalar>() {
        let a = S::from_count(7);
        let b = S::from_big(&BigInt::from(7)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_f64(), 7.0);
    }

    #[test]
    fn exact_types_agree() {
        roundtrip::<u64>();
        roundtrip::<i128>();
        roundtrip::<BigInt>();
        roundtrip::<Ratio<i64>>();
        roundtrip::<BigRational>();
    }

    #[test]
    fn fractions_need_rational_types() {
        let half = BigRational::new(BigInt::from(1), BigInt::from(2));
        assert!(u64::from_rational(&half).is_none());
        assert_eq!(Ratio::<i64>::from_rational(&half), Some(Ratio::new(1, 2)));
        assert_eq!(BigRational::from_rational(&half), Some(half.clone()));
        assert_eq!(u64::from_rational(&BigRational::from_integer(BigInt::from(3))), Some(3));
    }

    #[test]
    fn overflow_is_reported() {
        let huge = BigInt::from(u64::MAX) * 4;
        assert!(u64::from_big(&huge).is_none());
        assert!(BigInt::from_big(&huge).is_some());
    }
}
