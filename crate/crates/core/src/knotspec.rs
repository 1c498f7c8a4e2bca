//! 2-bridge knot parameters and the data of their two-generator presentation.
//!
//! A knot `K(p, q)` is stored with `p` odd and positive and `q` odd in
//! `(-p, p)`. The group is `<x, y | w x = y w>` with
//! `w = x^e1 y^e2 … x^e(p-2) y^e(p-1)` and `e_i = (-1)^floor(i q / p)`.

use rug::{Integer, Rational};
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::KnotError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TwoBridgeKnot {
    p: i64,
    q: i64,
    is_torus: bool,
}

impl TwoBridgeKnot {
    pub fn p(&self) -> i64 {
        self.p
    }

    pub fn q(&self) -> i64 {
        self.q
    }

    pub fn is_torus(&self) -> bool {
        self.is_torus
    }

    /// `K(p, -q)`.
    pub fn mirror(&self) -> TwoBridgeKnot {
        validate_knot(self.p, -self.q).expect("mirror of a valid knot is valid")
    }

    /// Same knot up to isotopy and mirroring: `q ≡ ±q'^{±1} (mod p)`.
    pub fn is_equivalent(&self, other: &TwoBridgeKnot) -> bool {
        self.p == other.p && equivalence_class(self.p, self.q).contains(&other.q.rem_euclid(other.p))
    }

    /// Every `(p, q)` with odd `q` in `(-p, p)`, `3 <= p <= max_p`.
    pub fn enumerate(max_p: i64) -> impl Iterator<Item = TwoBridgeKnot> {
        (3..=max_p).step_by(2).flat_map(|p| {
            (-(p - 1)..p)
                .filter(|q| q.rem_euclid(2) == 1)
                .filter_map(move |q| validate_knot(p, q).ok())
        })
    }
}

impl fmt::Display for TwoBridgeKnot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "K({}, {})", self.p, self.q)
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn mod_inverse(a: i64, m: i64) -> Option<i64> {
    let inv = Integer::from(a).invert(&Integer::from(m)).ok()?;
    inv.to_i64()
}

/// Residues mod `p` of `±q^{±1}`.
fn equivalence_class(p: i64, q: i64) -> Vec<i64> {
    let mut class = vec![q.rem_euclid(p), (-q).rem_euclid(p)];
    if let Some(inv) = mod_inverse(q, p) {
        class.push(inv.rem_euclid(p));
        class.push((-inv).rem_euclid(p));
    }
    class
}

pub fn validate_knot(p: i64, q: i64) -> Result<TwoBridgeKnot, KnotError> {
    let err = |reason| KnotError::NotTwoBridge { p, q, reason };
    if p <= 0 || p % 2 == 0 {
        return Err(err("p must be a positive odd integer"));
    }
    if q.rem_euclid(2) == 0 {
        return Err(err("q must be odd"));
    }
    if q.abs() >= p {
        return Err(err("|q| must be smaller than p"));
    }
    if gcd(p, q) != 1 {
        return Err(err("p and q must be coprime"));
    }
    // the scan covers q' = ±q^{±1}; a torus knot is one whose class contains ±1
    let is_torus = equivalence_class(p, q)
        .into_iter()
        .map(|r| odd_representative(p, r))
        .any(|r| r.abs() == 1);
    Ok(TwoBridgeKnot { p, q, is_torus })
}

/// The odd integer in `(-p, p)` congruent to `r` mod `p`.
fn odd_representative(p: i64, r: i64) -> i64 {
    let r = r.rem_euclid(p);
    if r % 2 == 1 {
        r
    } else {
        r - p
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignData {
    /// `signs[i - 1] = e_i` for `1 <= i <= p - 1`.
    pub signs: Vec<i8>,
    pub sigma: i64,
}

impl SignData {
    /// `e_i`, 1-based.
    pub fn e(&self, i: usize) -> i8 {
        self.signs[i - 1]
    }
}

pub fn sign_data(knot: &TwoBridgeKnot) -> SignData {
    let (p, q) = (knot.p, knot.q);
    let signs: Vec<i8> = (1..p)
        .map(|i| if (i * q).div_euclid(p) % 2 == 0 { 1 } else { -1 })
        .collect();
    let sigma = signs.iter().map(|&s| s as i64).sum();
    SignData { signs, sigma }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Generator {
    X,
    Y,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelatorWord {
    pub letters: Vec<(Generator, i8)>,
    pub starred: bool,
}

impl fmt::Display for RelatorWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (g, e)) in self.letters.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            let name = match g {
                Generator::X => "x",
                Generator::Y => "y",
            };
            if *e == 1 {
                f.write_str(name)?;
            } else {
                write!(f, "{name}^{e}")?;
            }
        }
        Ok(())
    }
}

/// `(w, w*)`: `w` starts with `x`, `w*` with `y`; exponents follow the signs.
pub fn relator_words(knot: &TwoBridgeKnot) -> (RelatorWord, RelatorWord) {
    let signs = sign_data(knot).signs;
    let word = |starred: bool| {
        let letters = signs
            .iter()
            .enumerate()
            .map(|(i, &e)| {
                let first = i % 2 == 0;
                let g = if first != starred { Generator::X } else { Generator::Y };
                (g, e)
            })
            .collect();
        RelatorWord { letters, starred }
    };
    (word(false), word(true))
}

/// Continued fraction `[a_1, …, a_n]` read as
/// `q/p = 1/(a_1 + 1/(a_2 + … + 1/a_n))`, equivalently `p/q = a_1 + 1/(a_2 + …)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ContinuedFraction {
    entries: Vec<i64>,
}

impl ContinuedFraction {
    pub fn new(entries: Vec<i64>) -> Result<Self, KnotError> {
        if entries.is_empty() {
            return Err(KnotError::InvalidFamily("empty continued fraction".into()));
        }
        if let Some(index) = entries.iter().position(|&a| a == 0) {
            return Err(KnotError::DegenerateEntry { index });
        }
        Ok(ContinuedFraction { entries })
    }

    pub fn entries(&self) -> &[i64] {
        &self.entries
    }

    /// `[-a_n, …, -a_1]`.
    pub fn inverse(&self) -> ContinuedFraction {
        ContinuedFraction {
            entries: self.entries.iter().rev().map(|a| -a).collect(),
        }
    }

    pub fn scaled(&self, sign: i8) -> ContinuedFraction {
        ContinuedFraction {
            entries: self.entries.iter().map(|a| a * sign as i64).collect(),
        }
    }

    /// `p/q = a_1 + 1/(a_2 + …)` via the convergent recurrence.
    /// `None` when the value is infinite (zero final denominator).
    pub fn value(&self) -> Option<Rational> {
        let (mut h_prev, mut h) = (Integer::from(1), Integer::from(self.entries[0]));
        let (mut k_prev, mut k) = (Integer::from(0), Integer::from(1));
        for &a in &self.entries[1..] {
            let h_next = Integer::from(a) * &h + &h_prev;
            let k_next = Integer::from(a) * &k + &k_prev;
            h_prev = std::mem::replace(&mut h, h_next);
            k_prev = std::mem::replace(&mut k, k_next);
        }
        if k == 0 {
            None
        } else {
            Some(Rational::from((h, k)))
        }
    }
}

impl fmt::Display for ContinuedFraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.entries.iter().map(|a| a.to_string()).collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

pub fn cf_to_pq(cf: &ContinuedFraction) -> Result<TwoBridgeKnot, KnotError> {
    let value = cf.value().ok_or_else(|| KnotError::NotAKnot {
        numer: "1".into(),
        denom: "0".into(),
    })?;
    let not_a_knot = || KnotError::NotAKnot {
        numer: value.numer().to_string(),
        denom: value.denom().to_string(),
    };
    // value = p/q with the sign carried by q
    let p = value.numer().clone().abs();
    let q = if value.cmp0().is_lt() {
        -value.denom().clone()
    } else {
        value.denom().clone()
    };
    let (Some(p), Some(q)) = (p.to_i64(), q.to_i64()) else {
        return Err(not_a_knot());
    };
    if p % 2 == 0 || p < 3 {
        return Err(not_a_knot());
    }
    validate_knot(p, odd_representative(p, q)).map_err(|_| not_a_knot())
}

/// Canonical expansion: Euclid on `p/|q|`, entries carrying the sign of `q`.
pub fn pq_to_cf(knot: &TwoBridgeKnot) -> ContinuedFraction {
    let sign = knot.q.signum();
    let (mut a, mut b) = (knot.p, knot.q.abs());
    let mut entries = Vec::new();
    while b != 0 {
        entries.push(sign * (a / b));
        (a, b) = (b, a % b);
    }
    ContinuedFraction { entries }
}

/// Double-twist knot `C(k, m)` with `m = ±2n`, using the four-case table
/// (k odd/even × sign of m) exactly as tabulated.
pub fn double_twist_to_pq(k: i64, m: i64) -> Result<TwoBridgeKnot, KnotError> {
    if k < 1 {
        return Err(KnotError::InvalidDoubleTwist {
            k,
            m,
            reason: "k must be positive",
        });
    }
    if m == 0 || m % 2 != 0 {
        return Err(KnotError::InvalidDoubleTwist {
            k,
            m,
            reason: "m must be even and nonzero",
        });
    }
    let n = m.abs() / 2;
    let (p, q) = match (k % 2 == 1, m > 0) {
        (true, true) => (-1 + 2 * n * k, k),
        (true, false) => (1 + 2 * n * k, k),
        (false, true) => (-1 + 2 * n * k, 1 - (2 * n - 1) * k),
        (false, false) => (1 + 2 * n * k, -1 - (2 * n - 1) * k),
    };
    if p < 3 {
        return Err(KnotError::InvalidDoubleTwist {
            k,
            m,
            reason: "parameters give the unknot",
        });
    }
    validate_knot(p, q)
}

/// `C(2, ±2)` is commonly called the figure-eight knot, but the tabulated
/// formula sends it to `K(3, ∓1)`.
pub fn double_twist_notation_conflict(k: i64, m: i64) -> bool {
    k == 2 && m.abs() == 2
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WangFamilySpec {
    pub base: ContinuedFraction,
    pub c: Vec<i64>,
    pub eps: Vec<i8>,
}

impl WangFamilySpec {
    pub fn new(base: ContinuedFraction, c: Vec<i64>, eps: Vec<i8>) -> Result<Self, KnotError> {
        if eps.len() != c.len() + 1 || c.len() % 2 != 0 {
            return Err(KnotError::InvalidFamily(format!(
                "need 2n twists and 2n+1 signs, got {} and {}",
                c.len(),
                eps.len()
            )));
        }
        if eps.iter().any(|&e| e != 1 && e != -1) {
            return Err(KnotError::InvalidFamily("signs must be ±1".into()));
        }
        Ok(WangFamilySpec { base, c, eps })
    }

    /// Family over the `[3, 1, 2]` base.
    pub fn six_two(c: Vec<i64>, eps: Vec<i8>) -> Result<Self, KnotError> {
        let base = ContinuedFraction::new(vec![3, 1, 2])?;
        WangFamilySpec::new(base, c, eps)
    }

    /// `d = eps_1 - eps_2 + eps_3 - … ± eps_{2n+1}`.
    pub fn d(&self) -> i64 {
        self.eps
            .iter()
            .enumerate()
            .map(|(i, &e)| if i % 2 == 0 { e as i64 } else { -(e as i64) })
            .sum()
    }
}

/// Raw entries `[e_1 a, 2c_1, e_2 a^-1, 2c_2, e_3 a, …, e_{2n+1} a]`,
/// zeros included.
pub fn wang_family_entries(spec: &WangFamilySpec) -> Vec<i64> {
    let inverse = spec.base.inverse();
    let mut entries = Vec::new();
    for (i, &e) in spec.eps.iter().enumerate() {
        let block = if i % 2 == 0 { &spec.base } else { &inverse };
        entries.extend(block.scaled(e).entries);
        if let Some(&c) = spec.c.get(i) {
            entries.push(2 * c);
        }
    }
    entries
}

/// Removes zero entries with `[…, a, 0, b, …] = […, a + b, …]` and a
/// leading `[0, 0, …] = […]`. `None` when a zero survives at either end.
pub fn contract_zeros(entries: &[i64]) -> Option<Vec<i64>> {
    let mut out = entries.to_vec();
    loop {
        if out.len() >= 2 && out[0] == 0 && out[1] == 0 {
            out.drain(..2);
            continue;
        }
        match out.iter().skip(1).position(|&a| a == 0).map(|i| i + 1) {
            Some(i) if i + 1 < out.len() => {
                let merged = out[i - 1] + out[i + 1];
                out.splice(i - 1..=i + 1, [merged]);
            }
            Some(_) => return None,
            None => break,
        }
    }
    if out.is_empty() || out[0] == 0 {
        None
    } else {
        Some(out)
    }
}

/// Assembles the family's continued fraction, contracting zero twists.
pub fn wang_family(spec: &WangFamilySpec) -> Result<(ContinuedFraction, i64), KnotError> {
    let raw = wang_family_entries(spec);
    let entries = match contract_zeros(&raw) {
        Some(e) => e,
        None => {
            let index = raw.iter().position(|&a| a == 0).unwrap_or(0);
            return Err(KnotError::DegenerateEntry { index });
        }
    };
    let cf = ContinuedFraction::new(entries)?;
    Ok((cf, spec.d()))
}
