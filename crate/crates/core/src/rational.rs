//! Exact rational numbers.
//!
//! [`Rational`] is an arbitrary-precision fraction kept in lowest terms with a
//! positive denominator. Text form is `"num/den"`, or `"k"` for integers.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub type Rational = num_rational::BigRational;

pub fn int(k: i64) -> Rational {
    Rational::from_integer(BigInt::from(k))
}

/// `num / den`, reduced. Panics when `den == 0`; use [`checked_ratio`] on
/// untrusted input.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn checked_ratio(num: i64, den: i64) -> Result<Rational> {
    if den == 0 {
        return Err(Error::ParseRational {
            text: format!("{num}/{den}"),
            reason: "zero denominator",
        });
    }
    Ok(ratio(num, den))
}

pub fn checked_div(a: &Rational, b: &Rational) -> Option<Rational> {
    if b.is_zero() {
        None
    } else {
        Some(a / b)
    }
}

/// Canonical text: `"k"` for integers, `"num/den"` otherwise.
pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses `"k"`, `"-k"`, or `"num/den"`. Whitespace is not accepted.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let bad = |reason| Error::ParseRational {
        text: text.to_owned(),
        reason,
    };
    let parse_int = |s: &str| -> Result<BigInt> {
        let digits = s.strip_prefix('-').unwrap_or(s);
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad("not an integer"));
        }
        s.parse::<BigInt>().map_err(|_| bad("not an integer"))
    };
    match text.split_once('/') {
        None => Ok(Rational::from_integer(parse_int(text)?)),
        Some((num, den)) => {
            let num = parse_int(num)?;
            let den = parse_int(den)?;
            if den.is_zero() {
                return Err(bad("zero denominator"));
            }
            if den.is_negative() {
                return Err(bad("negative denominator"));
            }
            Ok(Rational::new(num, den))
        }
    }
}

pub fn sum<'a>(values: impl IntoIterator<Item = &'a Rational>) -> Rational {
    values.into_iter().fold(Rational::zero(), |acc, v| acc + v)
}

pub fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter()
        .zip(b)
        .fold(Rational::zero(), |acc, (x, y)| acc + x * y)
}

pub fn is_unit_interval(r: &Rational) -> bool {
    !r.is_negative() && *r <= Rational::one()
}
