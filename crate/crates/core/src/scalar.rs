//! Scalar abstraction shared by every generic computation in the crate.
//!
//! Anything that behaves like an ordered field works: `f64`, `f32` and
//! `BigRational` all qualify. Integer types also satisfy the bounds but
//! divide with truncation, so do not use them.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive};

pub trait Scalar:
    Clone
    + fmt::Debug
    + fmt::Display
    + PartialOrd
    + Num
    + Signed
    + FromPrimitive
    + ToPrimitive
    + Send
    + Sync
    + 'static
{
}

impl<T> Scalar for T where
    T: Clone
        + fmt::Debug
        + fmt::Display
        + PartialOrd
        + Num
        + Signed
        + FromPrimitive
        + ToPrimitive
        + Send
        + Sync
        + 'static
{
}

/// `num / den` in the target scalar.
pub fn ratio<T: Scalar>(num: i64, den: i64) -> T {
    let n = T::from_i64(num).expect("integer fits scalar");
    let d = T::from_i64(den).expect("integer fits scalar");
    n / d
}

pub fn int<T: Scalar>(n: i64) -> T {
    T::from_i64(n).expect("integer fits scalar")
}

pub fn powu<T: Scalar>(x: &T, n: u32) -> T {
    num_traits::pow(x.clone(), n as usize)
}

pub fn to_f64<T: Scalar>(x: &T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Converts a double into the target scalar. For rationals the conversion is
/// exact (the binary value of `x`, not the nearest short decimal).
pub fn from_f64<T: Scalar>(x: f64) -> Option<T> {
    T::from_f64(x)
}

pub fn max<T: Scalar>(a: T, b: T) -> T {
    if b > a {
        b
    } else {
        a
    }
}

pub fn min<T: Scalar>(a: T, b: T) -> T {
    if b < a {
        b
    } else {
        a
    }
}

/// Parses a decimal literal (`0.3`, `1e-3`, `-2.5E2`) or a fraction
/// (`3/10`) into the target scalar. Decimals are read as exact
/// mantissa / 10^k, so `0.3` becomes `3/10` for rationals.
pub fn parse_scalar<T: Scalar>(text: &str) -> Option<T> {
    let text = text.trim();
    if let Some((num, den)) = text.split_once('/') {
        let n: T = parse_scalar(num)?;
        let d: T = parse_scalar(den)?;
        if d.is_zero() {
            return None;
        }
        return Some(n / d);
    }
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(pos) => (&text[..pos], text[pos + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let all_digits = format!("{int_part}{frac_part}");
    let numerator: BigInt = all_digits.parse().ok()?;
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10u32);
    let value = if scale >= 0 {
        BigRational::from_integer(numerator * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(numerator, num_traits::pow(ten, (-scale) as usize))
    };
    let value = if negative { -value } else { value };
    from_rational(&value)
}

/// Rounds an exact rational into the target scalar.
pub fn from_rational<T: Scalar>(value: &BigRational) -> Option<T> {
    // Exact path for rational targets: rebuild from numerator and denominator
    // when they fit, otherwise go through the float value.
    if let (Some(n), Some(d)) = (value.numer().to_i64(), value.denom().to_i64()) {
        return Some(ratio(n, d));
    }
    T::from_f64(value.to_f64()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_decimals_exactly_for_rationals() {
        let x: BigRational = parse_scalar("0.3").unwrap();
        assert_eq!(x, BigRational::new(3.into(), 10.into()));
        let y: BigRational = parse_scalar("1e-3").unwrap();
        assert_eq!(y, BigRational::new(1.into(), 1000.into()));
        let z: BigRational = parse_scalar("-2.5E2").unwrap();
        assert_eq!(z, BigRational::from_integer((-250).into()));
    }

    #[test]
    fn parses_fractions_and_floats() {
        let x: f64 = parse_scalar("3/10").unwrap();
        assert_eq!(x, 0.3);
        let y: f64 = parse_scalar("0.3").unwrap();
        assert_eq!(y, 0.3);
        assert_eq!(parse_scalar::<f64>("1e-9"), Some(1e-9));
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_scalar::<f64>("").is_none());
        assert!(parse_scalar::<f64>(".").is_none());
        assert!(parse_scalar::<f64>("0.3x").is_none());
        assert!(parse_scalar::<f64>("1/0").is_none());
    }

    #[test]
    fn powu_matches_repeated_product() {
        assert_eq!(powu(&0.5f64, 3), 0.125);
        let half: BigRational = ratio(1, 2);
        assert_eq!(powu(&half, 0), BigRational::from_integer(1.into()));
    }
}
