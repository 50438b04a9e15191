//! Typed constants shared by queries, c-instances and ground instances.

use std::cmp::Ordering;
use std::fmt;

use num::{BigInt, BigRational, Signed, Zero};

/// A constant from a numeric or string domain.
///
/// Numbers are exact fractions so that order reasoning never depends on
/// floating point rounding.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Value {
    Num(BigRational),
    Str(String),
}

impl Value {
    pub fn int(n: i64) -> Value {
        Value::Num(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn str(s: &str) -> Value {
        Value::Str(s.to_string())
    }

    /// Parses a decimal literal such as `2.25`, `-3` or `10`.
    pub fn parse_decimal(text: &str) -> Option<Value> {
        let (neg, body) = match text.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, text),
        };
        if body.is_empty() {
            return None;
        }
        let (int_part, frac_part) = match body.split_once('.') {
            Some((a, b)) => (a, b),
            None => (body, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return None;
        }
        if !int_part.chars().all(|c| c.is_ascii_digit()) || !frac_part.chars().all(|c| c.is_ascii_digit()) {
            return None;
        }
        let digits = format!("{int_part}{frac_part}");
        let numer: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().ok()? };
        let denom = num::pow(BigInt::from(10), frac_part.len());
        let mut r = BigRational::new(numer, denom);
        if neg {
            r = -r;
        }
        Some(Value::Num(r))
    }

    pub fn as_num(&self) -> Option<&BigRational> {
        match self {
            Value::Num(n) => Some(n),
            Value::Str(_) => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Str(s) => Some(s),
            Value::Num(_) => None,
        }
    }

    pub fn is_integer(&self) -> bool {
        matches!(self, Value::Num(n) if n.is_integer())
    }
}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Value::Num(a), Value::Num(b)) => a.cmp(b),
            (Value::Str(a), Value::Str(b)) => a.cmp(b),
            (Value::Num(_), Value::Str(_)) => Ordering::Less,
            (Value::Str(_), Value::Num(_)) => Ordering::Greater,
        }
    }
}

/// Renders a rational as a terminating decimal when possible, otherwise as `p/q`.
pub fn format_rational(r: &BigRational) -> String {
    if r.is_integer() {
        return r.to_integer().to_string();
    }
    let mut denom = r.denom().clone();
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let mut twos = 0usize;
    let mut fives = 0usize;
    while (&denom % &two).is_zero() {
        denom /= &two;
        twos += 1;
    }
    while (&denom % &five).is_zero() {
        denom /= &five;
        fives += 1;
    }
    if denom != BigInt::from(1) {
        return format!("{}/{}", r.numer(), r.denom());
    }
    let places = twos.max(fives);
    let scaled = r * BigRational::from_integer(num::pow(BigInt::from(10), places));
    let n = scaled.to_integer();
    let sign = if n.is_negative() { "-" } else { "" };
    let digits = n.abs().to_string();
    let digits = format!("{:0>width$}", digits, width = places + 1);
    let (a, b) = digits.split_at(digits.len() - places);
    format!("{sign}{a}.{b}")
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(n) => write!(f, "{}", format_rational(n)),
            Value::Str(s) => write!(f, "'{}'", s.replace('\'', "''")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimals_parse_exactly() {
        let v = Value::parse_decimal("2.25").unwrap();
        assert_eq!(v, Value::Num(BigRational::new(9.into(), 4.into())));
        assert_eq!(Value::parse_decimal("-3").unwrap(), Value::int(-3));
        assert!(Value::parse_decimal("1.2.3").is_none());
        assert!(Value::parse_decimal("").is_none());
    }

    #[test]
    fn rationals_render_as_decimals() {
        assert_eq!(Value::parse_decimal("2.75").unwrap().to_string(), "2.75");
        assert_eq!(Value::parse_decimal("-0.5").unwrap().to_string(), "-0.5");
        assert_eq!(Value::int(3).to_string(), "3");
        let third = Value::Num(BigRational::new(1.into(), 3.into()));
        assert_eq!(third.to_string(), "1/3");
    }

    #[test]
    fn numbers_order_before_strings() {
        assert!(Value::int(100) < Value::str("a"));
        assert!(Value::int(1) < Value::int(2));
    }
}
