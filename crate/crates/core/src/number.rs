//! Constant values inside expressions: exact arbitrary-precision rationals
//! for anything that came from a literal, with an f64 escape hatch for
//! values injected from numeric computations.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::fmt;

/// Exponent magnitude beyond which rational powers are left unfolded.
const MAX_FOLD_EXP: i64 = 64;

#[derive(Debug, Clone)]
pub enum Number {
    Rational(BigRational),
    Float(f64),
}

impl Number {
    pub fn integer(value: i64) -> Self {
        Number::Rational(BigRational::from_integer(BigInt::from(value)))
    }

    pub fn rational(numer: i64, denom: i64) -> Self {
        assert!(denom != 0, "zero denominator");
        Number::Rational(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    /// Wraps an f64. Non-finite values are not representable.
    pub fn float(value: f64) -> Self {
        assert!(value.is_finite(), "non-finite constant");
        // normalize -0.0 so structural equality matches numeric equality
        Number::Float(if value == 0.0 { 0.0 } else { value })
    }

    pub fn zero() -> Self {
        Number::integer(0)
    }

    pub fn one() -> Self {
        Number::integer(1)
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Number::Rational(q) => q.is_zero(),
            Number::Float(x) => *x == 0.0,
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            Number::Rational(q) => q.is_one(),
            Number::Float(x) => *x == 1.0,
        }
    }

    pub fn is_negative(&self) -> bool {
        match self {
            Number::Rational(q) => q.is_negative(),
            Number::Float(x) => *x < 0.0,
        }
    }

    /// The value as an i64 if it is an integer of reasonable size.
    pub fn as_integer(&self) -> Option<i64> {
        match self {
            Number::Rational(q) if q.is_integer() => q.numer().to_i64(),
            Number::Float(x) if x.fract() == 0.0 && x.abs() < 9e15 => Some(*x as i64),
            _ => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Number::Rational(q) => q.to_f64().unwrap_or(f64::NAN),
            Number::Float(x) => *x,
        }
    }

    #[allow(clippy::should_implement_trait)] // by-reference negation
    pub fn neg(&self) -> Number {
        match self {
            Number::Rational(q) => Number::Rational(-q.clone()),
            Number::Float(x) => Number::float(-x),
        }
    }

    pub fn abs(&self) -> Number {
        if self.is_negative() {
            self.neg()
        } else {
            self.clone()
        }
    }

    /// Exact addition; a float operand makes the result a float.
    pub fn add(&self, other: &Number) -> Number {
        match (self, other) {
            (Number::Rational(a), Number::Rational(b)) => Number::Rational(a + b),
            _ => Number::float(self.to_f64() + other.to_f64()),
        }
    }

    pub fn mul(&self, other: &Number) -> Number {
        match (self, other) {
            (Number::Rational(a), Number::Rational(b)) => Number::Rational(a * b),
            _ => Number::float(self.to_f64() * other.to_f64()),
        }
    }

    /// Folds `self^exp` when that stays exact (rational base, integer
    /// exponent of moderate size) or both operands are floats with a
    /// finite result. Returns None when the power must stay symbolic.
    pub fn pow(&self, exp: &Number) -> Option<Number> {
        match self {
            Number::Rational(base) => {
                let e = exp.as_integer()?;
                if e.abs() > MAX_FOLD_EXP {
                    return None;
                }
                if base.is_zero() && e < 0 {
                    return None; // division by zero: left for eval to report
                }
                if e >= 0 {
                    Some(Number::Rational(num_traits::pow::pow(
                        base.clone(),
                        e as usize,
                    )))
                } else {
                    Some(Number::Rational(
                        num_traits::pow::pow(base.clone(), (-e) as usize)
                            .recip(),
                    ))
                }
            }
            Number::Float(base) => {
                let result = base.powf(exp.to_f64());
                if result.is_finite() {
                    Some(Number::float(result))
                } else {
                    None
                }
            }
        }
    }

    /// Total order used by the canonical expression order: rationals sort
    /// before floats, then by value.
    pub fn canonical_cmp(&self, other: &Number) -> Ordering {
        match (self, other) {
            (Number::Rational(a), Number::Rational(b)) => a.cmp(b),
            (Number::Rational(_), Number::Float(_)) => Ordering::Less,
            (Number::Float(_), Number::Rational(_)) => Ordering::Greater,
            (Number::Float(a), Number::Float(b)) => a.total_cmp(b),
        }
    }
}

impl PartialEq for Number {
    fn eq(&self, other: &Self) -> bool {
        self.canonical_cmp(other) == Ordering::Equal
    }
}

impl Eq for Number {}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Number::Rational(q) => {
                if q.is_integer() {
                    write!(f, "{}", q.numer())
                } else {
                    write!(f, "{}/{}", q.numer(), q.denom())
                }
            }
            // {:?} prints the shortest decimal that round-trips
            Number::Float(x) => write!(f, "{x:?}"),
        }
    }
}

/// Parses an integer, decimal or scientific literal into an exact rational.
/// The caller guarantees the text matches the numeric-literal grammar.
pub fn rational_from_literal(text: &str) -> Option<BigRational> {
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(pos) => (&text[..pos], text[pos + 1..].parse::<i64>().ok()?),
        None => (text, 0),
    };
    let (int_part, frac_part) = match mantissa.find('.') {
        Some(pos) => (&mantissa[..pos], &mantissa[pos + 1..]),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    let digits: String = format!("{int_part}{frac_part}");
    let numer: BigInt = digits.parse().ok()?;
    let ten = BigInt::from(10);
    let shift = exponent - frac_part.len() as i64;
    let value = if shift >= 0 {
        BigRational::from_integer(numer * num_traits::pow::pow(ten, shift as usize))
    } else {
        BigRational::new(numer, num_traits::pow::pow(ten, (-shift) as usize))
    };
    Some(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_parsing_is_exact() {
        assert_eq!(
            rational_from_literal("1.5").unwrap(),
            BigRational::new(BigInt::from(3), BigInt::from(2))
        );
        assert_eq!(
            rational_from_literal("1e-6").unwrap(),
            BigRational::new(BigInt::from(1), BigInt::from(1_000_000))
        );
        assert_eq!(
            rational_from_literal("12.34e2").unwrap(),
            BigRational::from_integer(BigInt::from(1234))
        );
        assert!(rational_from_literal("e5").is_none());
    }

    #[test]
    fn rational_pow_folds_exactly() {
        let two = Number::integer(2);
        let ten = Number::integer(10);
        assert_eq!(two.pow(&ten).unwrap(), Number::integer(1024));
        let half = Number::rational(1, 2);
        assert_eq!(
            half.pow(&Number::integer(-2)).unwrap(),
            Number::integer(4)
        );
        // non-integer exponents stay symbolic
        assert!(two.pow(&Number::rational(1, 2)).is_none());
    }

    #[test]
    fn float_contagion() {
        let a = Number::rational(1, 2);
        let b = Number::float(0.25);
        assert_eq!(a.add(&b), Number::float(0.75));
        assert_eq!(a.mul(&a), Number::rational(1, 4));
    }
}
