//! Exact arbitrary-precision rational arithmetic.
//!
//! All probabilities, weights and tolerances in this crate are values of
//! [`Rational`]. The representation is always normalized: positive
//! denominator, numerator and denominator coprime. Normalization is
//! maintained by every arithmetic operation, so equality is structural.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact rational number with arbitrary-precision numerator and denominator.
pub type Rational = num_rational::BigRational;

/// Builds the rational `n / d`. Panics if `d == 0`.
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Builds the integer rational `n / 1`.
pub fn rat_int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Parses a rational written as `num/den` or a plain integer.
pub fn parse_rational(text: &str) -> Result<Rational, String> {
    text.trim()
        .parse::<Rational>()
        .map_err(|e| format!("invalid rational {text:?}: {e}"))
}

/// `base^exp` for a non-negative integer exponent.
pub fn pow(base: &Rational, exp: usize) -> Rational {
    let mut acc = Rational::one();
    for _ in 0..exp {
        acc *= base;
    }
    acc
}

/// Nearest `f64` approximation, for rendering and sampling only.
pub fn to_f64(value: &Rational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

/// Renders `value` as a decimal string with `digits` fractional digits,
/// truncated toward zero. Exact enough for reports; the exact fraction is
/// always reported alongside.
pub fn decimal_string(value: &Rational, digits: u32) -> String {
    let sign = if value.is_negative() { "-" } else { "" };
    let abs = value.abs();
    let scale = BigInt::from(10u32).pow(digits);
    let scaled = (abs * Rational::from_integer(scale.clone())).trunc().to_integer();
    let int_part = &scaled / &scale;
    let frac_part = &scaled % &scale;
    if digits == 0 {
        return format!("{sign}{int_part}");
    }
    format!(
        "{sign}{int_part}.{frac:0>width$}",
        frac = frac_part,
        width = digits as usize
    )
}

/// True iff `value` lies in the closed interval `[0, 1]`.
pub fn is_probability(value: &Rational) -> bool {
    !value.is_negative() && value <= &Rational::one()
}

/// Sum of a slice of rationals.
pub fn sum<'a>(values: impl IntoIterator<Item = &'a Rational>) -> Rational {
    values.into_iter().fold(Rational::zero(), |acc, v| acc + v)
}
