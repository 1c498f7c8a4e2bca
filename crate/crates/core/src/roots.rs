//! Exact real-root isolation for univariate polynomials with rational
//! coefficients, by Sturm sequences and bisection.

use rug::{Integer, Rational};
use std::cmp::Ordering;

use crate::laurent::UPoly;

/// Dense rational polynomial, lowest degree first, no trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct RatPoly {
    coeffs: Vec<Rational>,
}

impl RatPoly {
    pub fn new(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.last().is_some_and(|c| c.cmp0() == Ordering::Equal) {
            coeffs.pop();
        }
        RatPoly { coeffs }
    }

    pub fn from_integers(coeffs: &[Integer]) -> Self {
        RatPoly::new(coeffs.iter().map(Rational::from).collect())
    }

    pub fn from_upoly(p: &UPoly) -> Self {
        RatPoly::from_integers(&p.to_dense())
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    fn lead(&self) -> &Rational {
        self.coeffs.last().expect("nonzero polynomial")
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        let mut acc = Rational::new();
        for c in self.coeffs.iter().rev() {
            acc *= x;
            acc += c;
        }
        acc
    }

    pub fn derivative(&self) -> RatPoly {
        RatPoly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| Rational::from(c * k as u32))
                .collect(),
        )
    }

    /// Quotient and remainder of Euclidean division.
    pub fn div_rem(&self, divisor: &RatPoly) -> (RatPoly, RatPoly) {
        let dd = divisor.degree().expect("division by the zero polynomial");
        let mut rem = self.coeffs.clone();
        if rem.len() <= dd {
            return (RatPoly::default(), self.clone());
        }
        let mut quot = vec![Rational::new(); rem.len() - dd];
        let lead = divisor.lead();
        for k in (0..quot.len()).rev() {
            let factor = Rational::from(&rem[k + dd] / lead);
            if factor.cmp0() != Ordering::Equal {
                for (j, c) in divisor.coeffs.iter().enumerate() {
                    rem[k + j] -= Rational::from(&factor * c);
                }
            }
            quot[k] = factor;
        }
        rem.truncate(dd);
        (RatPoly::new(quot), RatPoly::new(rem))
    }

    pub fn monic(&self) -> RatPoly {
        if self.is_zero() {
            return self.clone();
        }
        let lead = self.lead().clone();
        RatPoly::new(self.coeffs.iter().map(|c| Rational::from(c / &lead)).collect())
    }

    /// Monic greatest common divisor (zero if both are zero).
    pub fn gcd(&self, other: &RatPoly) -> RatPoly {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let r = a.div_rem(&b).1;
            a = b;
            b = r;
        }
        a.monic()
    }

    /// The squarefree part `p / gcd(p, p')`.
    pub fn squarefree(&self) -> RatPoly {
        if self.degree().unwrap_or(0) == 0 {
            return self.monic();
        }
        let g = self.gcd(&self.derivative());
        self.div_rem(&g).0.monic()
    }
}

/// A real root, exact when `lo == hi`, otherwise the unique root of the
/// squarefree part in the open interval `(lo, hi)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootInterval {
    pub lo: Rational,
    pub hi: Rational,
}

impl RootInterval {
    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    pub fn width(&self) -> Rational {
        Rational::from(&self.hi - &self.lo)
    }

    pub fn midpoint(&self) -> Rational {
        Rational::from(&self.lo + &self.hi) / 2u32
    }
}

fn sign(x: &Rational) -> i32 {
    match x.cmp0() {
        Ordering::Less => -1,
        Ordering::Equal => 0,
        Ordering::Greater => 1,
    }
}

struct Sturm {
    seq: Vec<RatPoly>,
}

impl Sturm {
    fn new(squarefree: &RatPoly) -> Self {
        let mut seq = vec![squarefree.clone(), squarefree.derivative()];
        loop {
            let n = seq.len();
            if seq[n - 1].is_zero() {
                seq.pop();
                break;
            }
            let r = seq[n - 2].div_rem(&seq[n - 1]).1;
            if r.is_zero() {
                break;
            }
            seq.push(RatPoly::new(r.coeffs.into_iter().map(|c| -c).collect()));
        }
        Sturm { seq }
    }

    fn variations(&self, x: &Rational) -> usize {
        let mut count = 0;
        let mut last = 0;
        for p in &self.seq {
            let s = sign(&p.eval(x));
            if s != 0 {
                if last != 0 && s != last {
                    count += 1;
                }
                last = s;
            }
        }
        count
    }

    /// Number of distinct roots in `(a, b]`.
    fn count(&self, a: &Rational, b: &Rational) -> usize {
        self.variations(a) - self.variations(b)
    }
}

/// Bound on the absolute value of every root (Cauchy).
fn root_bound(p: &RatPoly) -> Rational {
    let lead = Rational::from(p.lead().abs_ref());
    let max = p.coeffs[..p.coeffs.len() - 1]
        .iter()
        .map(|c| Rational::from(c.abs_ref()) / &lead)
        .max()
        .unwrap_or_default();
    max + 1u32
}

/// Isolates all distinct real roots, sorted increasingly.
pub fn isolate_real_roots(p: &RatPoly) -> Vec<RootInterval> {
    if p.degree().unwrap_or(0) == 0 {
        return Vec::new();
    }
    let bound = root_bound(p);
    isolate_in(p, &Rational::from(-&bound), &bound)
}

/// Isolates the distinct roots greater than `lo`.
pub fn isolate_above(p: &RatPoly, lo: &Rational) -> Vec<RootInterval> {
    if p.degree().unwrap_or(0) == 0 {
        return Vec::new();
    }
    let bound = root_bound(p);
    if bound <= *lo {
        return Vec::new();
    }
    isolate_in(p, lo, &bound)
}

/// Isolates the distinct roots in the half-open interval `(lo, hi]`.
pub fn isolate_in(p: &RatPoly, lo: &Rational, hi: &Rational) -> Vec<RootInterval> {
    if p.degree().unwrap_or(0) == 0 || lo >= hi {
        return Vec::new();
    }
    let sf = p.squarefree();
    let sturm = Sturm::new(&sf);
    let mut out = Vec::new();
    let mut stack = vec![(lo.clone(), hi.clone(), sturm.count(lo, hi))];
    while let Some((a, b, n)) = stack.pop() {
        match n {
            0 => {}
            1 if sf.eval(&b).cmp0() == Ordering::Equal => out.push(RootInterval { lo: b.clone(), hi: b }),
            1 => out.push(RootInterval { lo: a, hi: b }),
            _ => {
                let m = Rational::from(&a + &b) / 2u32;
                let left = sturm.count(&a, &m);
                stack.push((m.clone(), b, n - left));
                stack.push((a, m, left));
            }
        }
    }
    out.sort_by(|x, y| x.lo.cmp(&y.lo));
    out
}

/// Shrinks an isolating interval by bisection until its width is at most
/// `2^-bits * max(1, |root|)`.
pub fn refine_root(p: &RatPoly, root: &RootInterval, bits: u32) -> RootInterval {
    if root.is_exact() {
        return root.clone();
    }
    let sf = p.squarefree();
    let (mut a, mut b) = (root.lo.clone(), root.hi.clone());
    let sb = sign(&sf.eval(&b));
    let scale = Rational::from(Integer::from(1) << bits);
    loop {
        let mag = Rational::from(a.abs_ref())
            .max(Rational::from(b.abs_ref()))
            .max(Rational::from(1));
        if Rational::from(&b - &a) * &scale <= mag {
            return RootInterval { lo: a, hi: b };
        }
        let m = Rational::from(&a + &b) / 2u32;
        let sm = sign(&sf.eval(&m));
        if sm == 0 {
            return RootInterval { lo: m.clone(), hi: m };
        }
        if sm == sb {
            b = m;
        } else {
            a = m;
        }
    }
}

/// Distinct real roots shared by two polynomials.
pub fn common_real_roots(p: &RatPoly, q: &RatPoly) -> (RatPoly, Vec<RootInterval>) {
    let g = p.gcd(q);
    let roots = isolate_real_roots(&g);
    (g, roots)
}
