//! Canonical text form of exact rationals.
//!
//! Probabilities are written `p/q` or `n`. Anything that looks like a
//! floating-point literal is refused rather than converted.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RationalParseError {
    #[error("`{0}` is a floating-point literal; write probabilities as p/q")]
    FloatingPointLiteral(String),
    #[error("`{0}` has a zero or negative denominator")]
    NegativeOrZeroDenominator(String),
    #[error("`{0}` is not a rational number")]
    Malformed(String),
}

/// Parse `p/q` or `n` into a normalized rational.
pub fn parse_rational(text: &str) -> Result<Rational, RationalParseError> {
    let s = text.trim();
    if s.contains(['.', 'e', 'E']) || s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("nan")
    {
        return Err(RationalParseError::FloatingPointLiteral(text.to_string()));
    }
    let malformed = || RationalParseError::Malformed(text.to_string());
    let int = |part: &str| -> Result<BigInt, RationalParseError> {
        let part = part.trim();
        let digits = part.strip_prefix(['+', '-']).unwrap_or(part);
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(malformed());
        }
        part.parse::<BigInt>().map_err(|_| malformed())
    };
    match s.split_once('/') {
        None => Ok(Rational::from_integer(int(s)?)),
        Some((n, d)) => {
            let numer = int(n)?;
            let denom = int(d)?;
            if denom.sign() != Sign::Plus {
                return Err(RationalParseError::NegativeOrZeroDenominator(
                    text.to_string(),
                ));
            }
            Ok(Rational::new(numer, denom))
        }
    }
}

/// Render as `p/q`, or `n` when the denominator is one.
pub fn render_rational(value: &Rational) -> String {
    if value.denom().is_one() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

/// Fixed-point decimal with `digits` fractional digits, rounded half-to-even.
pub fn render_decimal(value: &Rational, digits: u32) -> String {
    let scale = BigInt::from(10u32).pow(digits);
    let scaled = value.abs() * Rational::from_integer(scale.clone());
    let (quot, rem) = scaled.numer().div_rem(scaled.denom());
    let twice = &rem * 2u32;
    let mut units = quot;
    match twice.cmp(scaled.denom()) {
        std::cmp::Ordering::Greater => units += 1u32,
        std::cmp::Ordering::Equal if units.is_odd() => units += 1u32,
        _ => {}
    }
    let (whole, frac) = units.div_rem(&scale);
    let sign = if value.is_negative() && !(whole.is_zero() && frac.is_zero()) {
        "-"
    } else {
        ""
    };
    if digits == 0 {
        return format!("{sign}{whole}");
    }
    format!(
        "{sign}{whole}.{:0>width$}",
        frac.to_string(),
        width = digits as usize
    )
}
