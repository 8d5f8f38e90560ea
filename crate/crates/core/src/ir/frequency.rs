use std::fmt;

use num_integer::Integer;
use num_traits::{Signed, Zero};

use super::{IrError, Rational};

/// An evaluation frequency in hertz, kept as a reduced positive fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Frequency {
    numerator: u64,
    denominator: u64,
}

impl Frequency {
    pub fn new(numerator: u64, denominator: u64) -> Result<Self, IrError> {
        if numerator == 0 || denominator == 0 {
            return Err(IrError::InvalidFrequency(format!("{numerator}/{denominator}")));
        }
        let g = numerator.gcd(&denominator);
        Ok(Frequency { numerator: numerator / g, denominator: denominator / g })
    }

    pub fn hz(hz: u64) -> Self {
        Frequency::new(hz, 1).expect("zero hertz")
    }

    pub fn from_rational(hz: Rational) -> Result<Self, IrError> {
        if !hz.is_positive() {
            return Err(IrError::InvalidFrequency(hz.to_string()));
        }
        Frequency::new(*hz.numer() as u64, *hz.denom() as u64)
    }

    pub fn numerator(&self) -> u64 {
        self.numerator
    }

    pub fn denominator(&self) -> u64 {
        self.denominator
    }

    pub fn as_rational(&self) -> Rational {
        Rational::new(self.numerator as i64, self.denominator as i64)
    }

    /// Length of one period in seconds.
    pub fn period(&self) -> Rational {
        Rational::new(self.denominator as i64, self.numerator as i64)
    }

    /// Slowest frequency that both `self` and `other` divide.
    pub fn lcm(&self, other: &Frequency) -> Frequency {
        freq_lcm(*self, *other)
    }

    /// True iff every evaluation instant of `self` is also one of `fast`.
    pub fn divides(&self, fast: &Frequency) -> bool {
        freq_divides(*self, *fast)
    }
}

/// `lcm(a.num, b.num) / gcd(a.den, b.den)`.
pub fn freq_lcm(a: Frequency, b: Frequency) -> Frequency {
    let numerator = a.numerator.lcm(&b.numerator);
    let denominator = a.denominator.gcd(&b.denominator);
    Frequency::new(numerator, denominator).expect("lcm of positive frequencies is positive")
}

/// `fast / slow` is a positive integer.
pub fn freq_divides(slow: Frequency, fast: Frequency) -> bool {
    // fast/slow = (fast.num * slow.den) / (fast.den * slow.num)
    let top = fast.numerator as u128 * slow.denominator as u128;
    let bottom = fast.denominator as u128 * slow.numerator as u128;
    top % bottom == 0
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}Hz", format_rational(self.as_rational()))
    }
}

/// Formats a non-negative rational as a terminating decimal when possible and
/// as `n/d` otherwise. The parser accepts both forms.
pub fn format_rational(value: Rational) -> String {
    if value.is_integer() {
        return value.numer().to_string();
    }
    let mut denom = *value.denom();
    let mut scale = 0u32;
    while denom % 2 == 0 {
        denom /= 2;
    }
    while denom % 5 == 0 {
        denom /= 5;
    }
    if denom != 1 {
        return format!("{}/{}", value.numer(), value.denom());
    }
    let mut scaled = value;
    while !scaled.is_integer() {
        scaled *= Rational::from_integer(10);
        scale += 1;
    }
    let digits = scaled.to_integer().abs().to_string();
    let sign = if value < Rational::zero() { "-" } else { "" };
    let width = scale as usize + 1;
    let padded = format!("{digits:0>width$}");
    let (int, frac) = padded.split_at(padded.len() - scale as usize);
    format!("{sign}{int}.{frac}")
}

/// Parses `12`, `0.25` or `1/3` into an exact rational.
pub fn parse_rational(text: &str) -> Option<Rational> {
    if let Some((n, d)) = text.split_once('/') {
        let n: i64 = n.trim().parse().ok()?;
        let d: i64 = d.trim().parse().ok()?;
        if d == 0 {
            return None;
        }
        return Some(Rational::new(n, d));
    }
    let (negative, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().all(|c| c.is_ascii_digit()) || !frac.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    if frac.len() > 18 {
        return None;
    }
    let int_value: i64 = if int.is_empty() { 0 } else { int.parse().ok()? };
    let frac_value: i64 = if frac.is_empty() { 0 } else { frac.parse().ok()? };
    let scale = 10i64.checked_pow(frac.len() as u32)?;
    let value = Rational::new(int_value.checked_mul(scale)?.checked_add(frac_value)?, scale);
    Some(if negative { -value } else { value })
}
