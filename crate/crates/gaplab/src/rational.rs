//! Arbitrary-precision rational helpers: exact binomials and factorials,
//! decimal-string parsing, and dense univariate polynomials over the
//! rationals (with truncated series products).

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Exact rational scalar used throughout the identity checks.
pub type Rational = BigRational;

/// Lossy conversion for report rendering only.
pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseRationalError {
    #[error("malformed decimal literal {0:?}")]
    Malformed(String),
}

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn rat_int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Parses a decimal literal (optionally signed, optionally with a decimal
/// point and an integer exponent, e.g. "0.96", "-1/3" is NOT accepted,
/// "1e7", "2.5e-3") into an exact rational.
pub fn parse_decimal(s: &str) -> Result<Rational, ParseRationalError> {
    let err = || ParseRationalError::Malformed(s.to_string());
    let t = s.trim();
    if t.is_empty() {
        return Err(err());
    }
    let (mantissa, exp) = match t.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i64>().map_err(|_| err())?),
        None => (t, 0),
    };
    let (sign, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    if !int_part.chars().all(|c| c.is_ascii_digit())
        || !frac_part.chars().all(|c| c.is_ascii_digit())
    {
        return Err(err());
    }
    let joined = format!("{int_part}{frac_part}");
    let mut num: BigInt = joined.parse().map_err(|_| err())?;
    if sign < 0 {
        num = -num;
    }
    let shift = exp - frac_part.len() as i64;
    let ten = BigInt::from(10);
    let value = if shift >= 0 {
        Rational::from_integer(num * ten.pow(shift as u32))
    } else {
        Rational::new(num, ten.pow((-shift) as u32))
    };
    Ok(value)
}

/// Parses a count like "1e7" or "4000000" to an exact integer, rejecting
/// anything fractional or negative.
pub fn parse_count(s: &str) -> Result<u64, ParseRationalError> {
    let v = parse_decimal(s)?;
    if !v.is_integer() || v.is_negative() {
        return Err(ParseRationalError::Malformed(s.to_string()));
    }
    let big = v.to_integer();
    let (_, digits) = big.to_u64_digits();
    match digits.len() {
        0 => Ok(0),
        1 => Ok(digits[0]),
        _ => Err(ParseRationalError::Malformed(s.to_string())),
    }
}

/// n! as an exact integer.
pub fn factorial(n: u64) -> BigInt {
    let mut acc = BigInt::one();
    for i in 2..=n {
        acc *= i;
    }
    acc
}

/// C(n, k) as an exact integer (0 when k > n).
pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Dense univariate polynomial over the rationals, ascending coefficients,
/// trailing zeros trimmed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalPoly {
    coeffs: Vec<Rational>,
}

impl RationalPoly {
    pub fn new(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        RationalPoly { coeffs }
    }

    pub fn zero() -> Self {
        RationalPoly { coeffs: Vec::new() }
    }

    pub fn constant(c: Rational) -> Self {
        Self::new(vec![c])
    }

    /// 1 + x, the binomial atom.
    pub fn one_plus_x() -> Self {
        Self::new(vec![Rational::one(), Rational::one()])
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    /// Coefficient of x^i (zero beyond the degree).
    pub fn coeff(&self, i: usize) -> Rational {
        self.coeffs.get(i).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::new((0..n).map(|i| self.coeff(i) + other.coeff(i)).collect())
    }

    pub fn scale(&self, c: &Rational) -> Self {
        Self::new(self.coeffs.iter().map(|a| a * c).collect())
    }

    /// Product truncated to degree `max_deg` (series arithmetic).
    pub fn mul_truncated(&self, other: &Self, max_deg: usize) -> Self {
        let mut out = vec![Rational::zero(); max_deg + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if i > max_deg || a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if i + j > max_deg {
                    break;
                }
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    pub fn mul(&self, other: &Self) -> Self {
        match (self.degree(), other.degree()) {
            (Some(a), Some(b)) => self.mul_truncated(other, a + b),
            _ => Self::zero(),
        }
    }

    /// Power truncated to degree `max_deg`.
    pub fn pow_truncated(&self, e: u64, max_deg: usize) -> Self {
        let mut acc = Self::constant(Rational::one());
        for _ in 0..e {
            acc = acc.mul_truncated(self, max_deg);
        }
        acc
    }

    pub fn eval(&self, at: &Rational) -> Rational {
        let mut acc = Rational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * at + c;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_decimal_cases() {
        assert_eq!(parse_decimal("0.96").unwrap(), rat(96, 100));
        assert_eq!(parse_decimal("1e7").unwrap(), rat_int(10_000_000));
        assert_eq!(parse_decimal("-2.5e-3").unwrap(), rat(-25, 10_000));
        assert_eq!(parse_decimal("20").unwrap(), rat_int(20));
        assert_eq!(parse_decimal(".5").unwrap(), rat(1, 2));
        assert!(parse_decimal("").is_err());
        assert!(parse_decimal("1.2.3").is_err());
        assert!(parse_decimal("abc").is_err());
    }

    #[test]
    fn parse_count_cases() {
        assert_eq!(parse_count("1e7").unwrap(), 10_000_000);
        assert_eq!(parse_count("15").unwrap(), 15);
        assert_eq!(parse_count("1.5e1").unwrap(), 15);
        assert!(parse_count("1.23e1").is_err());
        assert!(parse_count("-5").is_err());
        assert!(parse_count("0.5").is_err());
    }

    #[test]
    fn combinatorics_exact() {
        assert_eq!(factorial(0), BigInt::from(1));
        assert_eq!(factorial(6), BigInt::from(720));
        assert_eq!(binomial(10, 3), BigInt::from(120));
        assert_eq!(binomial(3, 5), BigInt::from(0));
        assert_eq!(binomial(2, 1), BigInt::from(2));
    }

    #[test]
    fn poly_arithmetic() {
        // (1 + x)^3 = 1 + 3x + 3x^2 + x^3
        let p = RationalPoly::one_plus_x().pow_truncated(3, 10);
        assert_eq!(p.coeff(0), rat_int(1));
        assert_eq!(p.coeff(1), rat_int(3));
        assert_eq!(p.coeff(2), rat_int(3));
        assert_eq!(p.coeff(3), rat_int(1));
        assert_eq!(p.degree(), Some(3));

        // truncation drops high powers
        let t = RationalPoly::one_plus_x().pow_truncated(5, 2);
        assert_eq!(t.degree(), Some(2));
        assert_eq!(t.coeff(2), rat_int(10));

        // evaluation
        assert_eq!(p.eval(&rat(1, 2)), rat(27, 8));
    }
}
