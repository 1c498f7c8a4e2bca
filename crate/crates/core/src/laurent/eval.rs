//! Numerical evaluation of exact Laurent polynomials.
//!
//! Real evaluation converts the (binary) inputs to exact rationals, runs
//! Horner's scheme exactly, and rounds once. The only error is that final
//! rounding, so the reported bound is `|value| * 2^(1 - bits)`.

use rug::ops::Pow;
use rug::{Assign, Float, Integer, Rational};

use super::poly::BivarPoly;
use crate::error::EvalError;
use crate::numeric::{float_to_rational, Precision};

#[derive(Clone, Debug)]
pub struct Evaluation {
    pub value: Float,
    /// Absolute bound on `|value - exact|`.
    pub error_bound: Float,
}

/// Exact value at rational `(t, u)`.
pub fn eval_exact(poly: &BivarPoly, t: &Rational, u: &Rational) -> Result<Rational, EvalError> {
    if t.cmp0().is_eq() {
        return Err(EvalError::ZeroT);
    }
    let Some((lo, hi)) = poly.t_range() else {
        return Ok(Rational::new());
    };
    // t^-lo * poly is a polynomial in t; Horner over t then divide once.
    let mut acc = Rational::new();
    for e in (lo..=hi).rev() {
        acc *= t;
        let c = poly.t_coeff(e);
        if !c.is_zero() {
            acc += c.eval_rational(u);
        }
    }
    if lo != 0 {
        let scale = t.clone().pow(lo.unsigned_abs());
        if lo > 0 {
            acc *= scale;
        } else {
            acc /= scale;
        }
    }
    Ok(acc)
}

/// `n * 2^s`.
struct Dyadic {
    n: Integer,
    s: i64,
}

impl Dyadic {
    fn zero() -> Self {
        Dyadic {
            n: Integer::new(),
            s: 0,
        }
    }

    fn mul_parts(&mut self, n: &Integer, s: i64) {
        if n.cmp0().is_eq() {
            self.n = Integer::new();
            self.s = 0;
        } else {
            self.n *= n;
            self.s += s;
        }
    }

    fn add(&mut self, n: &Integer, s: i64) {
        if n.cmp0().is_eq() {
            return;
        }
        if self.n.cmp0().is_eq() {
            self.n.assign(n);
            self.s = s;
        } else if s >= self.s {
            self.n += Integer::from(n << (s - self.s) as u32);
        } else {
            self.n <<= (self.s - s) as u32;
            self.n += n;
            self.s = s;
        }
    }
}

fn split(x: &Float) -> (Integer, i64) {
    if x.is_zero() {
        return (Integer::new(), 0);
    }
    match x.to_integer_exp() {
        Some((n, e)) => (n, e as i64),
        None => (Integer::new(), 0),
    }
}

/// Exact value at a point with binary floating coordinates. Works on
/// dyadic integers and divides once at the end.
pub fn eval_float_exact(poly: &BivarPoly, t: &Float, u: &Float) -> Result<Rational, EvalError> {
    if t.is_zero() {
        return Err(EvalError::ZeroT);
    }
    let Some((lo, hi)) = poly.t_range() else {
        return Ok(Rational::new());
    };
    let (tn, ts) = split(t);
    let (un, us) = split(u);
    let mut acc = Dyadic::zero();
    for e in (lo..=hi).rev() {
        acc.mul_parts(&tn, ts);
        let c = poly.t_coeff(e);
        let Some(top) = c.degree() else { continue };
        let mut cu = Dyadic::zero();
        for k in (0..=top).rev() {
            cu.mul_parts(&un, us);
            let ck = c.coeff(k);
            if ck.cmp0().is_ne() {
                cu.add(&ck, 0);
            }
        }
        acc.add(&cu.n, cu.s);
    }
    // acc = sum c_e t^(e - lo); multiply by t^lo = tn^lo 2^(ts lo).
    let shift = acc.s + ts * lo as i64;
    let mut numer = acc.n;
    let mut denom = Integer::from(1);
    if lo >= 0 {
        numer *= tn.pow(lo as u32);
    } else {
        denom = tn.pow(lo.unsigned_abs());
    }
    if shift >= 0 {
        numer <<= shift as u32;
    } else {
        denom <<= (-shift) as u32;
    }
    Ok(Rational::from((numer, denom)))
}

pub fn eval_real(poly: &BivarPoly, t: &Float, u: &Float, precision: Precision) -> Result<Evaluation, EvalError> {
    let exact = eval_float_exact(poly, t, u)?;
    let bits = precision.bits();
    let value = Float::with_val(bits, &exact);
    let error_bound = Float::with_val(bits, value.abs_ref()) * precision.unit_roundoff();
    Ok(Evaluation { value, error_bound })
}

/// Shorthand for the value of [`eval_real`].
pub fn eval_value(poly: &BivarPoly, t: &Float, u: &Float, precision: Precision) -> Result<Float, EvalError> {
    eval_real(poly, t, u, precision).map(|e| e.value)
}

/// Value at `t = e^{iθ}` as `(re, im)`.
pub fn eval_unit_circle(poly: &BivarPoly, theta: &Float, u: &Float, precision: Precision) -> (Float, Float) {
    let bits = precision.bits() + 32;
    let u_exact = float_to_rational(u);
    let mut re = Float::new(bits);
    let mut im = Float::new(bits);
    for (e, c) in poly.t_coeffs() {
        let coeff = Float::with_val(bits, c.eval_rational(&u_exact));
        let angle = Float::with_val(bits, theta * e);
        let (sin, cos) = angle.sin_cos(Float::new(bits));
        re += Float::with_val(bits, &coeff * &cos);
        im += coeff * sin;
    }
    (
        Float::with_val(precision.bits(), re),
        Float::with_val(precision.bits(), im),
    )
}
