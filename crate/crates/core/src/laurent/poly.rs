//! Exact polynomials in `Z[u]` and `Z[t, t^-1][u]`.

use rug::{Integer, Rational};
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use crate::error::FormatError;

/// Sparse polynomial in `u` with integer coefficients. Zero coefficients
/// are never stored.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct UPoly {
    coeffs: BTreeMap<u32, Integer>,
}

impl UPoly {
    pub fn zero() -> Self {
        UPoly::default()
    }

    pub fn constant<T: Into<Integer>>(c: T) -> Self {
        UPoly::monomial(0, c)
    }

    pub fn monomial<T: Into<Integer>>(degree: u32, c: T) -> Self {
        let c = c.into();
        let mut coeffs = BTreeMap::new();
        if c != 0 {
            coeffs.insert(degree, c);
        }
        UPoly { coeffs }
    }

    /// From dense coefficients, lowest degree first.
    pub fn from_coeffs<T: Into<Integer> + Clone>(dense: &[T]) -> Self {
        let mut p = UPoly::zero();
        for (k, c) in dense.iter().enumerate() {
            p.add_term(k as u32, c.clone().into());
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.coeffs.keys().next_back().copied()
    }

    pub fn coeff(&self, degree: u32) -> Integer {
        self.coeffs.get(&degree).cloned().unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = (u32, &Integer)> {
        self.coeffs.iter().map(|(k, c)| (*k, c))
    }

    /// Dense coefficients, lowest degree first (empty for zero).
    pub fn to_dense(&self) -> Vec<Integer> {
        match self.degree() {
            None => Vec::new(),
            Some(d) => (0..=d).map(|k| self.coeff(k)).collect(),
        }
    }

    pub fn add_term(&mut self, degree: u32, c: Integer) {
        if c == 0 {
            return;
        }
        let entry = self.coeffs.entry(degree).or_default();
        *entry += c;
        if *entry == 0 {
            self.coeffs.remove(&degree);
        }
    }

    pub fn scale(&self, c: &Integer) -> UPoly {
        if *c == 0 {
            return UPoly::zero();
        }
        UPoly {
            coeffs: self.coeffs.iter().map(|(k, v)| (*k, Integer::from(v * c))).collect(),
        }
    }

    pub fn derivative(&self) -> UPoly {
        UPoly {
            coeffs: self
                .coeffs
                .iter()
                .filter(|(k, _)| **k > 0)
                .map(|(k, v)| (k - 1, Integer::from(v * *k)))
                .collect(),
        }
    }

    /// Exact Horner evaluation.
    pub fn eval_rational(&self, u: &Rational) -> Rational {
        let mut acc = Rational::new();
        let Some(top) = self.degree() else {
            return acc;
        };
        for k in (0..=top).rev() {
            acc *= u;
            if let Some(c) = self.coeffs.get(&k) {
                acc += c;
            }
        }
        acc
    }
}

impl fmt::Display for UPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let parts: Vec<String> = self
            .coeffs
            .iter()
            .rev()
            .map(|(k, c)| match k {
                0 => c.to_string(),
                1 => format!("{c}*u"),
                _ => format!("{c}*u^{k}"),
            })
            .collect();
        f.write_str(&parts.join(" + "))
    }
}

impl Add<&UPoly> for &UPoly {
    type Output = UPoly;
    fn add(self, rhs: &UPoly) -> UPoly {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl AddAssign<&UPoly> for UPoly {
    fn add_assign(&mut self, rhs: &UPoly) {
        for (k, c) in &rhs.coeffs {
            self.add_term(*k, c.clone());
        }
    }
}

impl SubAssign<&UPoly> for UPoly {
    fn sub_assign(&mut self, rhs: &UPoly) {
        for (k, c) in &rhs.coeffs {
            self.add_term(*k, Integer::from(-c));
        }
    }
}

impl Sub<&UPoly> for &UPoly {
    type Output = UPoly;
    fn sub(self, rhs: &UPoly) -> UPoly {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Neg for &UPoly {
    type Output = UPoly;
    fn neg(self) -> UPoly {
        UPoly {
            coeffs: self.coeffs.iter().map(|(k, c)| (*k, Integer::from(-c))).collect(),
        }
    }
}

impl Mul<&UPoly> for &UPoly {
    type Output = UPoly;
    fn mul(self, rhs: &UPoly) -> UPoly {
        let mut out = UPoly::zero();
        for (i, a) in &self.coeffs {
            for (j, b) in &rhs.coeffs {
                out.add_term(i + j, Integer::from(a * b));
            }
        }
        out
    }
}

/// Laurent polynomial in `t` with coefficients in `Z[u]`:
/// `sum_e t^e * terms[e](u)`. Zero coefficients are never stored.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct BivarPoly {
    terms: BTreeMap<i32, UPoly>,
}

impl BivarPoly {
    pub fn zero() -> Self {
        BivarPoly::default()
    }

    pub fn one() -> Self {
        BivarPoly::monomial(0, 0, 1)
    }

    pub fn constant<T: Into<Integer>>(c: T) -> Self {
        BivarPoly::monomial(0, 0, c)
    }

    /// `c * t^e * u^k`.
    pub fn monomial<T: Into<Integer>>(e: i32, k: u32, c: T) -> Self {
        let mut p = BivarPoly::zero();
        p.add_term(e, k, c.into());
        p
    }

    pub fn t_pow(e: i32) -> Self {
        BivarPoly::monomial(e, 0, 1)
    }

    pub fn u() -> Self {
        BivarPoly::monomial(0, 1, 1)
    }

    /// `t - t^-1`.
    pub fn t_minus_inverse() -> Self {
        &BivarPoly::t_pow(1) - &BivarPoly::t_pow(-1)
    }

    /// `c(u) * t^e`.
    pub fn from_upoly(e: i32, c: UPoly) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(e, c);
        }
        BivarPoly { terms }
    }

    pub fn from_terms<I, T>(terms: I) -> Self
    where
        I: IntoIterator<Item = (i32, u32, T)>,
        T: Into<Integer>,
    {
        let mut p = BivarPoly::zero();
        for (e, k, c) in terms {
            p.add_term(e, k, c.into());
        }
        p
    }

    pub fn add_term(&mut self, e: i32, k: u32, c: Integer) {
        if c == 0 {
            return;
        }
        let entry = self.terms.entry(e).or_default();
        entry.add_term(k, c);
        if entry.is_zero() {
            self.terms.remove(&e);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, e: i32, k: u32) -> Integer {
        self.terms.get(&e).map(|c| c.coeff(k)).unwrap_or_default()
    }

    /// The `Z[u]` coefficient of `t^e`.
    pub fn t_coeff(&self, e: i32) -> UPoly {
        self.terms.get(&e).cloned().unwrap_or_default()
    }

    /// The Laurent-in-`t` coefficient of `u^k`.
    pub fn u_coeff(&self, k: u32) -> BivarPoly {
        BivarPoly::from_terms(
            self.terms()
                .filter(|(_, kk, _)| *kk == k)
                .map(|(e, _, c)| (e, 0, c.clone())),
        )
    }

    /// Terms `(t-exponent, u-degree, coefficient)` in increasing
    /// `(t-exponent, u-degree)` order.
    pub fn terms(&self) -> impl Iterator<Item = (i32, u32, &Integer)> {
        self.terms
            .iter()
            .flat_map(|(e, c)| c.terms().map(move |(k, v)| (*e, k, v)))
    }

    pub fn t_coeffs(&self) -> impl Iterator<Item = (i32, &UPoly)> {
        self.terms.iter().map(|(e, c)| (*e, c))
    }

    pub fn term_count(&self) -> usize {
        self.terms.values().map(|c| c.coeffs.len()).sum()
    }

    /// `(min, max)` t-exponent, `None` for zero.
    pub fn t_range(&self) -> Option<(i32, i32)> {
        Some((*self.terms.keys().next()?, *self.terms.keys().next_back()?))
    }

    pub fn u_degree(&self) -> Option<u32> {
        self.terms.values().filter_map(|c| c.degree()).max()
    }

    pub fn scale(&self, c: &Integer) -> BivarPoly {
        BivarPoly::from_terms(self.terms().map(|(e, k, v)| (e, k, Integer::from(v * c))))
    }

    /// Multiplies by `t^shift`.
    pub fn shift_t(&self, shift: i32) -> BivarPoly {
        BivarPoly {
            terms: self.terms.iter().map(|(e, c)| (e + shift, c.clone())).collect(),
        }
    }

    /// Formal `∂/∂u`.
    pub fn d_du(&self) -> BivarPoly {
        BivarPoly::from_terms(
            self.terms()
                .filter(|(_, k, _)| *k > 0)
                .map(|(e, k, c)| (e, k - 1, Integer::from(c * k))),
        )
    }

    /// Formal `t ∂/∂t`.
    pub fn t_d_dt(&self) -> BivarPoly {
        BivarPoly::from_terms(self.terms().map(|(e, k, c)| (e, k, Integer::from(c * e))))
    }

    /// Formal `∂/∂t`; stays in the Laurent ring.
    pub fn d_dt(&self) -> BivarPoly {
        self.t_d_dt().shift_t(-1)
    }

    /// `t ↦ t^-1`.
    pub fn invert_t(&self) -> BivarPoly {
        BivarPoly {
            terms: self.terms.iter().map(|(e, c)| (-e, c.clone())).collect(),
        }
    }

    /// `u ↦ value`, where `value` may itself involve `t` and a fresh
    /// variable written in the `u` slot.
    pub fn subs_u(&self, value: &BivarPoly) -> BivarPoly {
        let Some(top) = self.u_degree() else {
            return BivarPoly::zero();
        };
        let mut acc = BivarPoly::zero();
        for k in (0..=top).rev() {
            acc = &(&acc * value) + &self.u_coeff(k);
        }
        acc
    }

    /// `t ↦ -1`.
    pub fn at_t_minus_one(&self) -> UPoly {
        let mut out = UPoly::zero();
        for (e, c) in &self.terms {
            if e.rem_euclid(2) == 0 {
                out += c;
            } else {
                out -= c;
            }
        }
        out
    }

    /// `t ↦ 1`.
    pub fn at_t_one(&self) -> UPoly {
        let mut out = UPoly::zero();
        for c in self.terms.values() {
            out += c;
        }
        out
    }

    /// For a polynomial free of `u`: dense integer coefficients of
    /// `t^shift * self` together with `shift`, so that the result is an
    /// ordinary polynomial in `t`. Panics if `u` occurs.
    pub fn to_t_polynomial(&self) -> (Vec<Integer>, i32) {
        assert!(self.u_degree().unwrap_or(0) == 0, "polynomial involves u");
        let Some((lo, hi)) = self.t_range() else {
            return (Vec::new(), 0);
        };
        let coeffs = (lo..=hi).map(|e| self.coeff(e, 0)).collect();
        (coeffs, -lo)
    }

    /// Canonical text: one `t^E*u^K:C` line per term in increasing
    /// `(E, K)` order. The zero polynomial is the empty string.
    pub fn to_canonical(&self) -> String {
        let mut out = String::new();
        for (e, k, c) in self.terms() {
            out.push_str(&format!("t^{e}*u^{k}:{c}\n"));
        }
        out
    }

    pub fn from_canonical(text: &str) -> Result<BivarPoly, FormatError> {
        let mut p = BivarPoly::zero();
        let mut last: Option<(i32, u32)> = None;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let bad = |reason: &str| FormatError::Poly {
                line: i + 1,
                reason: reason.to_string(),
            };
            let (mono, coeff) = line.split_once(':').ok_or_else(|| bad("missing ':'"))?;
            let (tpart, upart) = mono.split_once('*').ok_or_else(|| bad("missing '*'"))?;
            let e: i32 = tpart
                .strip_prefix("t^")
                .ok_or_else(|| bad("expected t^E"))?
                .parse()
                .map_err(|_| bad("bad t exponent"))?;
            let k: u32 = upart
                .strip_prefix("u^")
                .ok_or_else(|| bad("expected u^K"))?
                .parse()
                .map_err(|_| bad("bad u degree"))?;
            let c: Integer = coeff.parse().map_err(|_| bad("bad coefficient"))?;
            if c == 0 {
                return Err(bad("zero coefficient"));
            }
            if last.is_some_and(|prev| prev >= (e, k)) {
                return Err(bad("terms out of canonical order"));
            }
            last = Some((e, k));
            p.add_term(e, k, c);
        }
        Ok(p)
    }
}

impl fmt::Display for BivarPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let parts: Vec<String> = self
            .terms()
            .map(|(e, k, c)| match (e, k) {
                (0, 0) => c.to_string(),
                (0, _) => format!("{c}*u^{k}"),
                (_, 0) => format!("{c}*t^{e}"),
                _ => format!("{c}*t^{e}*u^{k}"),
            })
            .collect();
        f.write_str(&parts.join(" + "))
    }
}

impl Add<&BivarPoly> for &BivarPoly {
    type Output = BivarPoly;
    fn add(self, rhs: &BivarPoly) -> BivarPoly {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl AddAssign<&BivarPoly> for BivarPoly {
    fn add_assign(&mut self, rhs: &BivarPoly) {
        for (e, k, c) in rhs.terms() {
            self.add_term(e, k, c.clone());
        }
    }
}

impl Sub<&BivarPoly> for &BivarPoly {
    type Output = BivarPoly;
    fn sub(self, rhs: &BivarPoly) -> BivarPoly {
        let mut out = self.clone();
        for (e, k, c) in rhs.terms() {
            out.add_term(e, k, Integer::from(-c));
        }
        out
    }
}

impl Neg for &BivarPoly {
    type Output = BivarPoly;
    fn neg(self) -> BivarPoly {
        BivarPoly {
            terms: self.terms.iter().map(|(e, c)| (*e, -c)).collect(),
        }
    }
}

impl Mul<&BivarPoly> for &BivarPoly {
    type Output = BivarPoly;
    fn mul(self, rhs: &BivarPoly) -> BivarPoly {
        let mut out = BivarPoly::zero();
        for (e1, c1) in &self.terms {
            for (e2, c2) in &rhs.terms {
                let prod = c1 * c2;
                if prod.is_zero() {
                    continue;
                }
                let entry = out.terms.entry(e1 + e2).or_default();
                *entry += &prod;
                if entry.is_zero() {
                    out.terms.remove(&(e1 + e2));
                }
            }
        }
        out
    }
}

macro_rules! forward_owned {
    ($ty:ty, $($tr:ident $method:ident),*) => {$(
        impl $tr<$ty> for $ty {
            type Output = $ty;
            fn $method(self, rhs: $ty) -> $ty {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&$ty> for $ty {
            type Output = $ty;
            fn $method(self, rhs: &$ty) -> $ty {
                (&self).$method(rhs)
            }
        }
    )*};
}

forward_owned!(UPoly, Add add, Sub sub, Mul mul);
forward_owned!(BivarPoly, Add add, Sub sub, Mul mul);

impl Neg for BivarPoly {
    type Output = BivarPoly;
    fn neg(self) -> BivarPoly {
        -&self
    }
}

impl Neg for UPoly {
    type Output = UPoly;
    fn neg(self) -> UPoly {
        -&self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn t(e: i32) -> BivarPoly {
        BivarPoly::t_pow(e)
    }

    #[test]
    fn zero_coefficients_are_dropped() {
        let p = &BivarPoly::u() - &BivarPoly::u();
        assert!(p.is_zero());
        assert_eq!(p.t_range(), None);
        assert_eq!(p.u_degree(), None);
        let mut q = UPoly::monomial(3, 2);
        q.add_term(3, Integer::from(-2));
        assert!(q.is_zero());
        assert_eq!(UPoly::monomial(4, 0), UPoly::zero());
    }

    #[test]
    fn laurent_products() {
        let x = BivarPoly::t_minus_inverse();
        let sq = &x * &x;
        assert_eq!(sq, BivarPoly::from_terms([(2, 0, 1), (0, 0, -2), (-2, 0, 1)]));
        assert_eq!(&t(3) * &t(-3), BivarPoly::one());
    }

    #[test]
    fn derivatives() {
        // p = 3 t^-2 u^2 - t^4
        let p = BivarPoly::from_terms([(-2, 2, 3), (4, 0, -1)]);
        assert_eq!(p.d_du(), BivarPoly::from_terms([(-2, 1, 6)]));
        assert_eq!(p.t_d_dt(), BivarPoly::from_terms([(-2, 2, -6), (4, 0, -4)]));
        assert_eq!(p.d_dt(), BivarPoly::from_terms([(-3, 2, -6), (3, 0, -4)]));
    }

    #[test]
    fn substitution_and_specialization() {
        // p = t^2 - u, u -> (t - 1/t)^2 gives 2 - t^-2
        let p = &t(2) - &BivarPoly::u();
        let x = BivarPoly::t_minus_inverse();
        assert_eq!(p.subs_u(&(&x * &x)), BivarPoly::from_terms([(0, 0, 2), (-2, 0, -1)]));
        let q = BivarPoly::from_terms([(1, 1, 2), (2, 0, 1), (-3, 2, 5)]);
        assert_eq!(q.at_t_minus_one(), UPoly::from_coeffs(&[1, -2, -5]));
        assert_eq!(q.at_t_one(), UPoly::from_coeffs(&[1, 2, 5]));
        assert_eq!(q.invert_t(), BivarPoly::from_terms([(-1, 1, 2), (-2, 0, 1), (3, 2, 5)]));
        let r = BivarPoly::from_terms([(-2, 0, 1), (1, 0, -3)]);
        let (dense, shift) = r.to_t_polynomial();
        assert_eq!(shift, 2);
        assert_eq!(
            dense,
            vec![Integer::from(1), Integer::from(0), Integer::from(0), Integer::from(-3)]
        );
    }

    #[test]
    fn canonical_text() {
        let p = BivarPoly::from_terms([(0, 1, -1), (-2, 0, 1), (2, 0, 1), (0, 0, -1)]);
        assert_eq!(p.to_canonical(), "t^-2*u^0:1\nt^0*u^0:-1\nt^0*u^1:-1\nt^2*u^0:1\n");
        assert_eq!(BivarPoly::from_canonical(&p.to_canonical()).unwrap(), p);
        assert_eq!(BivarPoly::zero().to_canonical(), "");
        assert!(BivarPoly::from_canonical("").unwrap().is_zero());
        assert!(BivarPoly::from_canonical("t^1*u^0:1\nt^0*u^0:1\n").is_err());
        assert!(BivarPoly::from_canonical("t^1*u^0:0\n").is_err());
        assert!(BivarPoly::from_canonical("t1*u^0:1\n").is_err());
        assert!(BivarPoly::from_canonical("t^1*u^-1:1\n").is_err());
    }

    #[test]
    fn upoly_eval_and_derivative() {
        let p = UPoly::from_coeffs(&[1, 1, -8, 3]);
        assert_eq!(p.eval_rational(&Rational::from((1, 2))), Rational::from((-1, 8)));
        assert_eq!(p.derivative(), UPoly::from_coeffs(&[1, -16, 9]));
        assert_eq!(p.degree(), Some(3));
        assert_eq!(UPoly::zero().eval_rational(&Rational::from(5)), 0);
    }

    fn arb_poly() -> impl Strategy<Value = BivarPoly> {
        prop::collection::vec((-4i32..=4, 0u32..=3, -20i64..=20), 0..8).prop_map(BivarPoly::from_terms)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn ring_axioms(a in arb_poly(), b in arb_poly(), c in arb_poly()) {
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
            prop_assert_eq!(&a * &b, &b * &a);
            prop_assert_eq!(&(&a + &b) - &b, a.clone());
            prop_assert_eq!(&a * &BivarPoly::one(), a.clone());
        }

        #[test]
        fn canonical_round_trip(a in arb_poly()) {
            prop_assert_eq!(BivarPoly::from_canonical(&a.to_canonical()).unwrap(), a);
        }

        #[test]
        fn leibniz_rule(a in arb_poly(), b in arb_poly()) {
            let lhs = (&a * &b).d_du();
            let rhs = &(&a.d_du() * &b) + &(&a * &b.d_du());
            prop_assert_eq!(lhs, rhs);
            let lhs = (&a * &b).d_dt();
            let rhs = &(&a.d_dt() * &b) + &(&a * &b.d_dt());
            prop_assert_eq!(lhs, rhs);
        }
    }
}
