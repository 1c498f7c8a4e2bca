use std::collections::HashMap;
use std::ops::Mul;
use std::sync::{Arc, OnceLock, RwLock};

use super::poly::BivarPoly;
use crate::knotspec::{sign_data, TwoBridgeKnot};

/// 2×2 matrix over `Z[t, t^-1][u]`, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mat2 {
    pub entries: [[BivarPoly; 2]; 2],
}

impl Mat2 {
    pub fn new(a: BivarPoly, b: BivarPoly, c: BivarPoly, d: BivarPoly) -> Self {
        Mat2 {
            entries: [[a, b], [c, d]],
        }
    }

    pub fn identity() -> Self {
        Mat2::new(BivarPoly::one(), BivarPoly::zero(), BivarPoly::zero(), BivarPoly::one())
    }

    pub fn zero() -> Self {
        Mat2::new(
            BivarPoly::zero(),
            BivarPoly::zero(),
            BivarPoly::zero(),
            BivarPoly::zero(),
        )
    }

    pub fn a(&self) -> &BivarPoly {
        &self.entries[0][0]
    }

    pub fn b(&self) -> &BivarPoly {
        &self.entries[0][1]
    }

    pub fn c(&self) -> &BivarPoly {
        &self.entries[1][0]
    }

    pub fn d(&self) -> &BivarPoly {
        &self.entries[1][1]
    }

    pub fn det(&self) -> BivarPoly {
        &(self.a() * self.d()) - &(self.b() * self.c())
    }

    /// Inverse of a determinant-one matrix (the adjugate).
    pub fn inverse_unimodular(&self) -> Mat2 {
        debug_assert_eq!(self.det(), BivarPoly::one());
        Mat2::new(self.d().clone(), -self.b(), -self.c(), self.a().clone())
    }

    pub fn transpose(&self) -> Mat2 {
        Mat2::new(self.a().clone(), self.c().clone(), self.b().clone(), self.d().clone())
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().flatten().all(BivarPoly::is_zero)
    }
}

impl Mul<&Mat2> for &Mat2 {
    type Output = Mat2;
    fn mul(self, rhs: &Mat2) -> Mat2 {
        let m = &self.entries;
        let n = &rhs.entries;
        let entry = |i: usize, j: usize| &(&m[i][0] * &n[0][j]) + &(&m[i][1] * &n[1][j]);
        Mat2::new(entry(0, 0), entry(0, 1), entry(1, 0), entry(1, 1))
    }
}

impl std::ops::Sub<&Mat2> for &Mat2 {
    type Output = Mat2;
    fn sub(self, rhs: &Mat2) -> Mat2 {
        let e = |i: usize, j: usize| &self.entries[i][j] - &rhs.entries[i][j];
        Mat2::new(e(0, 0), e(0, 1), e(1, 0), e(1, 1))
    }
}

/// The meridian images `C`, `D` and the intertwiner `X`.
#[derive(Clone, Debug)]
pub struct BaseMatrices {
    pub c: Mat2,
    pub d: Mat2,
    pub x: Mat2,
    pub c_inv: Mat2,
    pub d_inv: Mat2,
}

/// `C = [[t, 1], [0, t^-1]]`, `D = [[t, 0], [-u, t^-1]]`,
/// `X = [[t - t^-1, 1], [-u, t^-1 - t]]`.
pub fn base_matrices() -> BaseMatrices {
    let t = BivarPoly::t_pow(1);
    let t_inv = BivarPoly::t_pow(-1);
    let u = BivarPoly::u();
    let c = Mat2::new(t.clone(), BivarPoly::one(), BivarPoly::zero(), t_inv.clone());
    let d = Mat2::new(t.clone(), BivarPoly::zero(), -&u, t_inv.clone());
    let x = Mat2::new(
        BivarPoly::t_minus_inverse(),
        BivarPoly::one(),
        -&u,
        -&BivarPoly::t_minus_inverse(),
    );
    let c_inv = c.inverse_unimodular();
    let d_inv = d.inverse_unimodular();
    BaseMatrices { c, d, x, c_inv, d_inv }
}

/// `W = C^e1 D^e2 … C^e(p-2) D^e(p-1)`, or `W*` (C and D swapped) when
/// `starred`. Multiplied left to right.
pub fn word_matrix(knot: &TwoBridgeKnot, starred: bool) -> Mat2 {
    let base = base_matrices();
    let signs = sign_data(knot).signs;
    signs.iter().enumerate().fold(Mat2::identity(), |acc, (i, &e)| {
        let first = (i % 2 == 0) != starred;
        let factor = match (first, e) {
            (true, 1) => &base.c,
            (true, _) => &base.c_inv,
            (false, 1) => &base.d,
            (false, _) => &base.d_inv,
        };
        &acc * factor
    })
}

/// Entries `a, b, c, d` of `W`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WordEntries {
    pub a: BivarPoly,
    pub b: BivarPoly,
    pub c: BivarPoly,
    pub d: BivarPoly,
}

type EntryCache = RwLock<HashMap<(i64, i64), Arc<WordEntries>>>;

fn entry_cache() -> &'static EntryCache {
    static CACHE: OnceLock<EntryCache> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Entries of `W` for `knot`, memoized per `(p, q)`.
pub fn entries(knot: &TwoBridgeKnot) -> Arc<WordEntries> {
    let key = (knot.p(), knot.q());
    if let Some(hit) = entry_cache().read().expect("entry cache poisoned").get(&key) {
        return Arc::clone(hit);
    }
    let w = word_matrix(knot, false);
    let [[a, b], [c, d]] = w.entries;
    let computed = Arc::new(WordEntries { a, b, c, d });
    let mut cache = entry_cache().write().expect("entry cache poisoned");
    Arc::clone(cache.entry(key).or_insert(computed))
}
