//! Working-precision plumbing around MPFR floats.
//!
//! All high-precision values leave the library as decimal strings in a
//! fixed scientific format (`d.ddd…e±x`) so they can be re-read by other
//! tools without going through binary doubles.

use rug::float::Round;
use rug::ops::Pow;
use rug::{Float, Rational};
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::FormatError;

/// Default working precision in significant decimal digits.
pub const DEFAULT_DIGITS: u32 = 50;

/// Smallest precision accepted by the public entry points.
pub const MIN_DIGITS: u32 = 30;

const LOG2_10: f64 = std::f64::consts::LOG2_10;

/// Working precision, stored as decimal digits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Precision {
    digits: u32,
}

impl Precision {
    pub fn digits(digits: u32) -> Self {
        Precision { digits: digits.max(1) }
    }

    pub fn decimal_digits(self) -> u32 {
        self.digits
    }

    /// Mantissa bits carrying `digits` decimal digits plus a few guard bits.
    pub fn bits(self) -> u32 {
        (self.digits as f64 * LOG2_10).ceil() as u32 + 8
    }

    pub fn doubled(self) -> Self {
        Precision::digits(self.digits * 2)
    }

    /// 2^(1 - bits), the per-operation relative rounding bound.
    pub fn unit_roundoff(self) -> Float {
        Float::with_val(self.bits(), 1) >> (self.bits() as i32 - 1)
    }

    pub fn float<T>(self, value: T) -> Float
    where
        Float: rug::Assign<T>,
    {
        Float::with_val(self.bits(), value)
    }
}

impl Default for Precision {
    fn default() -> Self {
        Precision::digits(DEFAULT_DIGITS)
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} digits", self.digits)
    }
}

/// Formats `x` with `digits` significant digits as `[-]d.ddd…e±x`.
///
/// The output is a pure function of the value and `digits`, so identical
/// inputs always produce byte-identical text.
pub fn format_decimal(x: &Float, digits: u32) -> String {
    if x.is_zero() {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "NaN".into()
        } else if x.is_sign_negative() {
            "-inf".into()
        } else {
            "inf".into()
        };
    }
    let (neg, mantissa, exp) = x.to_sign_string_exp_round(10, Some(digits as usize), Round::Nearest);
    let exp = exp.unwrap_or(0) - 1;
    let (lead, rest) = mantissa.split_at(1);
    let rest = rest.trim_end_matches('0');
    let mut out = String::with_capacity(mantissa.len() + 8);
    if neg {
        out.push('-');
    }
    out.push_str(lead);
    if !rest.is_empty() {
        out.push('.');
        out.push_str(rest);
    }
    out.push('e');
    out.push_str(&exp.to_string());
    out
}

/// Parses a decimal (or `inf`/`NaN`-free scientific) string at `bits` precision.
pub fn parse_decimal(text: &str, bits: u32) -> Result<Float, FormatError> {
    let parsed = Float::parse(text.trim()).map_err(|e| FormatError::Number {
        text: text.to_string(),
        reason: e.to_string(),
    })?;
    let value = Float::with_val(bits, parsed);
    if !value.is_finite() {
        return Err(FormatError::Number {
            text: text.to_string(),
            reason: "not a finite number".into(),
        });
    }
    Ok(value)
}

/// Parses `a/b`, an integer, or a finite decimal such as `-3.9` or `1e-2`
/// into an exact rational.
pub fn parse_rational(text: &str) -> Result<Rational, FormatError> {
    let text = text.trim();
    let bad = |reason: &str| FormatError::Number {
        text: text.to_string(),
        reason: reason.to_string(),
    };
    if let Some((num, den)) = text.split_once('/') {
        let num: rug::Integer = num.trim().parse().map_err(|_| bad("bad numerator"))?;
        let den: rug::Integer = den.trim().parse().map_err(|_| bad("bad denominator"))?;
        if den == 0 {
            return Err(bad("zero denominator"));
        }
        return Ok(Rational::from((num, den)));
    }
    let (mantissa, exp) = match text.find(['e', 'E']) {
        Some(i) => {
            let exp: i32 = text[i + 1..].parse().map_err(|_| bad("bad exponent"))?;
            (&text[..i], exp)
        }
        None => (text, 0),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.trim_start_matches(['+', '-']).is_empty() && frac_part.is_empty() {
        return Err(bad("empty number"));
    }
    if !frac_part.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad("bad fraction digits"));
    }
    let digits = format!("{int_part}{frac_part}");
    let digits = if digits == "-" || digits == "+" || digits.is_empty() {
        return Err(bad("empty number"));
    } else {
        digits
    };
    let numer: rug::Integer = digits.parse().map_err(|_| bad("bad digits"))?;
    let scale = exp - frac_part.len() as i32;
    let ten = rug::Integer::from(10);
    let value = if scale >= 0 {
        Rational::from(numer * ten.pow(scale as u32))
    } else {
        Rational::from((numer, ten.pow((-scale) as u32)))
    };
    Ok(value)
}

/// Exact value of a finite float.
pub fn float_to_rational(x: &Float) -> Rational {
    x.to_rational().expect("finite float")
}

pub fn rational_to_float(r: &Rational, bits: u32) -> Float {
    Float::with_val(bits, r)
}

/// `a/b` text for a rational, `n` for integers.
pub fn format_rational(r: &Rational) -> String {
    if *r.denom() == 1 {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}
