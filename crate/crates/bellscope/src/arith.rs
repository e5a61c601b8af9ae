//! Scalar abstraction shared by the exact-rational and floating-point code paths.
//!
//! Every probability-carrying type in this crate is generic over [`Scalar`].
//! The exact instantiation uses [`Rational`] (arbitrary-precision rationals)
//! with zero tolerance; the float instantiation uses `f64` with the pivot
//! tolerance [`FLOAT_TOL`]. Mixing the two in one operation is impossible by
//! construction: they are distinct types.

use std::fmt::{Debug, Display};
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

pub type Rational = BigRational;

/// Comparison tolerance used by all float-mode numerics (LP pivoting,
/// membership verdicts, screening residuals). Exact mode uses 0.
pub const FLOAT_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NumberParseError {
    #[error("empty number literal")]
    Empty,
    #[error("malformed number literal `{0}`")]
    Malformed(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
}

/// Arithmetic interface required by the polytope, representation and
/// common-cause machinery.
///
/// The tolerance predicates (`is_zero`, `is_positive`, `is_negative`) are the
/// only comparisons the LP engine is allowed to make, so a single constant
/// controls the float mode's behaviour.
pub trait Scalar:
    Clone
    + PartialEq
    + PartialOrd
    + Debug
    + Display
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + 'static
{
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_int(v: i64) -> Self;
    /// Panics if `den == 0`.
    fn from_fraction(num: i64, den: i64) -> Self;
    fn to_f64(&self) -> f64;

    /// Parses `"a/b"`, a decimal such as `"0.25"`, or an integer.
    fn parse(text: &str) -> Result<Self, NumberParseError>;
    /// Canonical text form; in exact mode a reduced fraction.
    fn render(&self) -> String;

    /// `|self| <= tolerance` (tolerance is 0 in exact mode).
    fn is_zero(&self) -> bool;
    /// `self > tolerance`.
    fn is_positive(&self) -> bool;
    /// `self < -tolerance`.
    fn is_negative(&self) -> bool;

    fn abs(&self) -> Self;

    fn is_one(&self) -> bool {
        (self.clone() - Self::one()).is_zero()
    }
}

fn parse_rational(text: &str) -> Result<Rational, NumberParseError> {
    let s = text.trim();
    if s.is_empty() {
        return Err(NumberParseError::Empty);
    }
    if let Some((num, den)) = s.split_once('/') {
        let n = BigInt::from_str(num.trim())
            .map_err(|_| NumberParseError::Malformed(text.to_string()))?;
        let d = BigInt::from_str(den.trim())
            .map_err(|_| NumberParseError::Malformed(text.to_string()))?;
        if d.is_zero() {
            return Err(NumberParseError::ZeroDenominator(text.to_string()));
        }
        return Ok(Rational::new(n, d));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(NumberParseError::Malformed(text.to_string()));
        }
        let negative = whole.starts_with('-');
        let whole_part = if whole == "-" || whole.is_empty() {
            BigInt::zero()
        } else {
            BigInt::from_str(whole).map_err(|_| NumberParseError::Malformed(text.to_string()))?
        };
        let frac_num = BigInt::from_str(frac)
            .map_err(|_| NumberParseError::Malformed(text.to_string()))?;
        let scale = num::pow::pow(BigInt::from(10), frac.len());
        let magnitude = whole_part.abs() * &scale + frac_num;
        let signed = if negative { -magnitude } else { magnitude };
        return Ok(Rational::new(signed, scale));
    }
    let n = BigInt::from_str(s).map_err(|_| NumberParseError::Malformed(text.to_string()))?;
    Ok(Rational::from_integer(n))
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn zero() -> Self {
        <Rational as Zero>::zero()
    }

    fn one() -> Self {
        <Rational as One>::one()
    }

    fn from_int(v: i64) -> Self {
        Rational::from_integer(BigInt::from(v))
    }

    fn from_fraction(num: i64, den: i64) -> Self {
        Rational::new(BigInt::from(num), BigInt::from(den))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn parse(text: &str) -> Result<Self, NumberParseError> {
        parse_rational(text)
    }

    fn render(&self) -> String {
        if self.is_integer() {
            self.numer().to_string()
        } else {
            format!("{}/{}", self.numer(), self.denom())
        }
    }

    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }

    fn is_positive(&self) -> bool {
        Signed::is_positive(self)
    }

    fn is_negative(&self) -> bool {
        Signed::is_negative(self)
    }

    fn abs(&self) -> Self {
        Signed::abs(self)
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn zero() -> Self {
        0.0
    }

    fn one() -> Self {
        1.0
    }

    fn from_int(v: i64) -> Self {
        v as f64
    }

    fn from_fraction(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        num as f64 / den as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn parse(text: &str) -> Result<Self, NumberParseError> {
        let s = text.trim();
        if s.is_empty() {
            return Err(NumberParseError::Empty);
        }
        if s.contains('/') {
            let q = parse_rational(s)?;
            return Ok(Scalar::to_f64(&q));
        }
        f64::from_str(s).map_err(|_| NumberParseError::Malformed(text.to_string()))
    }

    fn render(&self) -> String {
        format!("{self}")
    }

    fn is_zero(&self) -> bool {
        f64::abs(*self) <= FLOAT_TOL
    }

    fn is_positive(&self) -> bool {
        *self > FLOAT_TOL
    }

    fn is_negative(&self) -> bool {
        *self < -FLOAT_TOL
    }

    fn abs(&self) -> Self {
        f64::abs(*self)
    }
}

/// Sums a slice of scalars.
pub fn total<S: Scalar>(values: &[S]) -> S {
    values
        .iter()
        .cloned()
        .fold(S::zero(), |acc, v| acc + v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_decimals() {
        let half: Rational = Scalar::parse("1/2").unwrap();
        assert_eq!(half, Rational::from_fraction(1, 2));
        let quarter: Rational = Scalar::parse("0.25").unwrap();
        assert_eq!(quarter, Rational::from_fraction(1, 4));
        let tenth: Rational = Scalar::parse("0.1").unwrap();
        assert_eq!(tenth, Rational::from_fraction(1, 10));
        let neg: Rational = Scalar::parse("-0.5").unwrap();
        assert_eq!(neg, Rational::from_fraction(-1, 2));
        let int: Rational = Scalar::parse("3").unwrap();
        assert_eq!(int, Rational::from_int(3));
    }

    #[test]
    fn rejects_malformed_literals() {
        assert!(<Rational as Scalar>::parse("").is_err());
        assert!(<Rational as Scalar>::parse("1/0").is_err());
        assert!(<Rational as Scalar>::parse("a/b").is_err());
        assert!(<Rational as Scalar>::parse("1.2.3").is_err());
        assert!(<f64 as Scalar>::parse("abc").is_err());
    }

    #[test]
    fn renders_reduced_fractions() {
        let q = Rational::from_fraction(2, 4);
        assert_eq!(q.render(), "1/2");
        assert_eq!(Rational::from_int(7).render(), "7");
        assert_eq!(Rational::from_fraction(-3, 6).render(), "-1/2");
    }

    #[test]
    fn float_parse_accepts_fraction_syntax() {
        let v: f64 = Scalar::parse("1/4").unwrap();
        assert_eq!(v, 0.25);
    }

    #[test]
    fn tolerance_predicates() {
        assert!(Scalar::is_zero(&0.0));
        assert!(Scalar::is_zero(&1e-12));
        assert!(!Scalar::is_zero(&1e-6));
        assert!(Scalar::is_positive(&1e-6));
        assert!(!Scalar::is_positive(&1e-12));
        let q = Rational::from_fraction(1, 1_000_000_000_000i64);
        assert!(!Scalar::is_zero(&q));
        assert!(Scalar::is_positive(&q));
    }
}
