//! The Riley polynomial `P = A - (t - t^-1) B`, the slope equation in log
//! form, the `t = -1` system and the unit-circle specialization.

use rug::{Float, Integer, Rational};
use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use crate::error::{FormatError, RileyError};
use crate::knotspec::{sign_data, TwoBridgeKnot};
use crate::laurent::{entries, eval_float_exact, BivarPoly, UPoly};
use crate::numeric::{format_decimal, format_rational, Precision};
use crate::roots::{common_real_roots, RatPoly, RootInterval};

/// Per-knot polynomial data, with the derivatives used by the tracer.
#[derive(Clone, Debug)]
pub struct RileySystem {
    knot: TwoBridgeKnot,
    pub a: BivarPoly,
    pub b: BivarPoly,
    pub d: BivarPoly,
    pub p: BivarPoly,
    sigma: i64,
    pub dp_du: BivarPoly,
    pub dp_dt: BivarPoly,
    /// `((t - t^-1)^2 - u) B^2`, whose logarithm enters the slope.
    pub x: BivarPoly,
    pub dx_du: BivarPoly,
    pub dx_dt: BivarPoly,
}

impl RileySystem {
    /// Assembles a system from already computed entries.
    pub fn from_entries(knot: TwoBridgeKnot, a: BivarPoly, b: BivarPoly, d: BivarPoly) -> Self {
        let tm = BivarPoly::t_minus_inverse();
        let p = &a - &(&tm * &b);
        let x = &(&(&tm * &tm) - &BivarPoly::u()) * &(&b * &b);
        RileySystem {
            sigma: sign_data(&knot).sigma,
            knot,
            dp_du: p.d_du(),
            dp_dt: p.d_dt(),
            dx_du: x.d_du(),
            dx_dt: x.d_dt(),
            a,
            b,
            d,
            p,
            x,
        }
    }

    /// As [`RileySystem::from_entries`], also checking a stored `P`.
    pub fn from_parts(
        knot: TwoBridgeKnot,
        a: BivarPoly,
        b: BivarPoly,
        d: BivarPoly,
        p: &BivarPoly,
    ) -> Result<Self, FormatError> {
        let sys = RileySystem::from_entries(knot, a, b, d);
        if sys.p != *p {
            return Err(FormatError::Poly {
                line: 0,
                reason: "stored P differs from A - (t - 1/t) B".into(),
            });
        }
        Ok(sys)
    }

    pub fn knot(&self) -> &TwoBridgeKnot {
        &self.knot
    }

    pub fn sigma(&self) -> i64 {
        self.sigma
    }

    /// `P(t, u) == P(t^-1, u)` as Laurent polynomials.
    pub fn is_t_symmetric(&self) -> bool {
        self.p.invert_t() == self.p
    }
}

type SystemCache = RwLock<HashMap<(i64, i64), Arc<RileySystem>>>;

fn system_cache() -> &'static SystemCache {
    static CACHE: OnceLock<SystemCache> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// The Riley system of `knot`, memoized per `(p, q)`.
pub fn riley_system(knot: &TwoBridgeKnot) -> Arc<RileySystem> {
    let key = (knot.p(), knot.q());
    if let Some(hit) = system_cache().read().expect("system cache poisoned").get(&key) {
        return Arc::clone(hit);
    }
    let e = entries(knot);
    let sys = Arc::new(RileySystem::from_entries(*knot, e.a.clone(), e.b.clone(), e.d.clone()));
    let mut cache = system_cache().write().expect("system cache poisoned");
    Arc::clone(cache.entry(key).or_insert(sys))
}

/// Exact value rounded once to `bits`.
pub(crate) fn eval_at(poly: &BivarPoly, t: &Float, u: &Float, bits: u32) -> Result<Float, RileyError> {
    Ok(Float::with_val(bits, eval_float_exact(poly, t, u)?))
}

fn check_t(t: &Float) -> Result<(), RileyError> {
    if !t.is_finite() || *t <= 0 || *t == 1 {
        return Err(RileyError::InvalidT(format_decimal(t, 20)));
    }
    Ok(())
}

/// Exact `((t - t^-1)^2 - u) B^2`, checked positive.
fn slope_argument(sys: &RileySystem, t: &Float, u: &Float) -> Result<Rational, RileyError> {
    check_t(t)?;
    let x = eval_float_exact(&sys.x, t, u)?;
    if x.cmp0().is_gt() {
        return Ok(x);
    }
    if eval_float_exact(&sys.b, t, u)?.cmp0().is_eq() {
        return Err(RileyError::ZeroB);
    }
    let bits = t.prec().max(u.prec());
    Err(RileyError::NonPositiveArgument(format_decimal(
        &Float::with_val(bits, &x),
        20,
    )))
}

/// `(r - 2σ) ln t + ln(((t - t^-1)^2 - u) B^2)`; zero exactly when the
/// slope-`r` holonomy equation holds at `(t, u)`.
pub fn slope_residual(
    sys: &RileySystem,
    t: &Float,
    u: &Float,
    r: &Float,
    precision: Precision,
) -> Result<Float, RileyError> {
    let bits = precision.bits();
    let x = slope_argument(sys, t, u)?;
    let ln_x = Float::with_val(bits, &x).ln();
    let ln_t = Float::with_val(bits, t.ln_ref());
    let n = Float::with_val(bits, r - Float::with_val(bits, 2 * sys.sigma));
    Ok(n * ln_t + ln_x)
}

/// The slope realized at a point of `{P = 0}`:
/// `2σ - ln(((t - t^-1)^2 - u) B^2) / ln t`.
pub fn slope_of_point(sys: &RileySystem, t: &Float, u: &Float, precision: Precision) -> Result<Float, RileyError> {
    let bits = precision.bits();
    let x = slope_argument(sys, t, u)?;
    let ln_x = Float::with_val(bits, &x).ln();
    let ln_t = Float::with_val(bits, t.ln_ref());
    Ok(Float::with_val(bits, 2 * sys.sigma) - ln_x / ln_t)
}

/// Polynomials at `t = -1` and the common real roots of the two equations.
#[derive(Clone, Debug)]
pub struct MinusOneSystem {
    pub a_neg1: UPoly,
    pub b_neg1: UPoly,
    pub d_neg1: UPoly,
    pub n: Rational,
    /// `-num(N) u B(-1, u) - 2 den(N) D(-1, u)`.
    pub second: UPoly,
    /// Monic gcd of the two equations over the rationals.
    pub gcd: RatPoly,
    pub common_roots: Vec<RootInterval>,
}

impl MinusOneSystem {
    pub fn solvable(&self) -> bool {
        !self.common_roots.is_empty()
    }

    pub fn summary(&self) -> String {
        format!(
            "N = {}: A(-1,u) = {}; second = {}; {} common real root(s)",
            format_rational(&self.n),
            self.a_neg1,
            self.second,
            self.common_roots.len()
        )
    }
}

/// Specializes at `t = -1` for `N = r - 2σ`, which must have odd numerator
/// and denominator.
pub fn minus_one_system(sys: &RileySystem, n: &Rational) -> Result<MinusOneSystem, RileyError> {
    if n.numer().is_even() || n.denom().is_even() {
        return Err(RileyError::EvenSlopeComponent(format_rational(n)));
    }
    let a_neg1 = sys.a.at_t_minus_one();
    let b_neg1 = sys.b.at_t_minus_one();
    let d_neg1 = sys.d.at_t_minus_one();
    let ub = &UPoly::monomial(1, 1) * &b_neg1;
    let second = &ub.scale(&Integer::from(-n.numer())) - &d_neg1.scale(&Integer::from(n.denom() * 2u32));
    let (gcd, common_roots) = common_real_roots(&RatPoly::from_upoly(&a_neg1), &RatPoly::from_upoly(&second));
    Ok(MinusOneSystem {
        a_neg1,
        b_neg1,
        d_neg1,
        n: n.clone(),
        second,
        gcd,
        common_roots,
    })
}

/// `u ↦ P(e^{iθ}, u)`: real parts of the coefficients, lowest degree first.
#[derive(Clone, Debug)]
pub struct EllipticPolynomial {
    pub coeffs: Vec<Float>,
    /// Largest absolute imaginary part among the coefficients.
    pub imaginary_residual: Float,
}

impl EllipticPolynomial {
    pub fn eval(&self, u: &Float) -> Float {
        let mut acc = Float::new(u.prec());
        for c in self.coeffs.iter().rev() {
            acc *= u;
            acc += c;
        }
        acc
    }
}

pub fn elliptic_polynomial(sys: &RileySystem, theta: &Float, precision: Precision) -> EllipticPolynomial {
    let bits = precision.bits() + 32;
    let degree = sys.p.u_degree().unwrap_or(0);
    let mut re = vec![Float::new(bits); degree as usize + 1];
    let mut im = vec![Float::new(bits); degree as usize + 1];
    for (e, c) in sys.p.t_coeffs() {
        let (sin, cos) = Float::with_val(bits, theta * e).sin_cos(Float::new(bits));
        for (k, v) in c.terms() {
            re[k as usize] += Float::with_val(bits, &cos * v);
            im[k as usize] += Float::with_val(bits, &sin * v);
        }
    }
    let out_bits = precision.bits();
    let imaginary_residual = im
        .iter()
        .map(|x| Float::with_val(out_bits, x.abs_ref()))
        .fold(Float::new(out_bits), |m, x| if x > m { x } else { m });
    EllipticPolynomial {
        coeffs: re.into_iter().map(|x| Float::with_val(out_bits, x)).collect(),
        imaginary_residual,
    }
}
