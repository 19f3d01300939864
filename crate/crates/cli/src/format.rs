//! Cost formatting for CSV and terminal output.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow, Signed, Zero};

/// `r` as an exact decimal when it has a finite expansion (`7`, `12.25`),
/// otherwise as `n/d`.
pub fn exact(r: &BigRational) -> String {
    if r.is_integer() {
        return r.numer().to_string();
    }
    let (two, five) = (BigInt::from(2), BigInt::from(5));
    let mut rest = r.denom().clone();
    let (mut twos, mut fives) = (0u32, 0u32);
    while (&rest % &two).is_zero() {
        rest /= &two;
        twos += 1;
    }
    while (&rest % &five).is_zero() {
        rest /= &five;
        fives += 1;
    }
    if !rest.is_one() {
        return format!("{}/{}", r.numer(), r.denom());
    }
    let places = twos.max(fives);
    let scaled = r * BigRational::from_integer(BigInt::from(10).pow(places));
    point(&scaled.to_integer(), places)
}

/// `r` rounded half away from zero to `places` decimals, trailing zeros
/// kept.
pub fn rounded(r: &BigRational, places: u32) -> String {
    let scaled = (r * BigRational::from_integer(BigInt::from(10).pow(places))).round();
    point(&scaled.to_integer(), places)
}

fn point(n: &BigInt, places: u32) -> String {
    let digits = n.abs().to_string();
    let places = places as usize;
    let sign = if n.is_negative() { "-" } else { "" };
    if places == 0 {
        return format!("{sign}{digits}");
    }
    let padded = format!("{digits:0>width$}", width = places + 1);
    let (int, frac) = padded.split_at(padded.len() - places);
    format!("{sign}{int}.{frac}")
}

/// Exact mean of `values`; `None` when empty.
pub fn mean(values: &[BigRational]) -> Option<BigRational> {
    if values.is_empty() {
        return None;
    }
    let sum = values.iter().fold(BigRational::zero(), |a, b| a + b);
    Some(sum / BigRational::from_integer(BigInt::from(values.len())))
}
