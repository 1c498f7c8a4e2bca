//! Exact polynomial identities every 2-bridge knot must satisfy.

use rayon::prelude::*;
use serde::Serialize;

use crate::knotspec::{sign_data, TwoBridgeKnot};
use crate::laurent::{entries, BivarPoly};
use crate::riley::riley_system;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IdentityReport {
    pub p: i64,
    pub q: i64,
    /// `e_i = e_{p-i}`.
    pub palindrome: bool,
    /// `c = -u b`.
    pub c_is_minus_ub: bool,
    pub det_one: bool,
    /// `P(t, (t - 1/t)^2) = 1`.
    pub p_on_square_is_one: bool,
    /// `P(t, u) = P(1/t, u)`.
    pub t_symmetric: bool,
}

impl IdentityReport {
    pub fn passed(&self) -> bool {
        self.palindrome && self.c_is_minus_ub && self.det_one && self.p_on_square_is_one && self.t_symmetric
    }
}

pub fn check_identities(knot: &TwoBridgeKnot) -> IdentityReport {
    let signs = sign_data(knot).signs;
    let n = signs.len();
    let palindrome = (0..n).all(|i| signs[i] == signs[n - 1 - i]);
    let e = entries(knot);
    let c_is_minus_ub = e.c == -(&BivarPoly::u() * &e.b);
    let det_one = &(&e.a * &e.d) - &(&e.b * &e.c) == BivarPoly::one();
    let sys = riley_system(knot);
    let tm = BivarPoly::t_minus_inverse();
    let p_on_square_is_one = sys.p.subs_u(&(&tm * &tm)) == BivarPoly::one();
    IdentityReport {
        p: knot.p(),
        q: knot.q(),
        palindrome,
        c_is_minus_ub,
        det_one,
        p_on_square_is_one,
        t_symmetric: sys.is_t_symmetric(),
    }
}

/// Every knot with `p <= max_p`, checked in parallel and returned in
/// enumeration order.
pub fn identity_suite(max_p: i64) -> Vec<IdentityReport> {
    let knots: Vec<TwoBridgeKnot> = TwoBridgeKnot::enumerate(max_p).collect();
    knots.par_iter().map(check_identities).collect()
}
