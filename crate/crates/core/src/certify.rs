//! Slope certificates, Khoi admissibility, interval reports, rational
//! surgery checks and the Wang transfer of slope intervals.

use std::cmp::Ordering;

use rayon::prelude::*;
use rug::ops::Pow;
use rug::{Float, Integer, Rational};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::continuation::{
    polish_slope_point, slope_span, solve_slope, Branch, CurvePoint, Direction, Parameterization, StopReason,
    TraceConfig,
};
use crate::error::{CertifyError, TraceError};
use crate::knotspec::{cf_to_pq, wang_family, TwoBridgeKnot, WangFamilySpec};
use crate::laurent::{eval_float_exact, word_matrix, Mat2};
use crate::numeric::{format_decimal, format_rational, parse_decimal, Precision};
use crate::riley::{riley_system, slope_residual, RileySystem};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KhoiClass {
    RealHyperbolic,
    UnitCircleElliptic,
    TMinusOne,
}

impl KhoiClass {
    pub fn as_str(self) -> &'static str {
        match self {
            KhoiClass::RealHyperbolic => "real_hyperbolic",
            KhoiClass::UnitCircleElliptic => "unit_circle_elliptic",
            KhoiClass::TMinusOne => "t_minus_one",
        }
    }
}

/// Where a representation's `t` lives.
#[derive(Clone, Debug, PartialEq)]
pub enum KhoiPoint {
    Real {
        t: Float,
        u: Float,
    },
    /// `t = e^{iθ}`.
    UnitCircle {
        theta: Float,
        u: Float,
    },
}

/// Decides which real form, if any, a normal-form pair `(t, u)` conjugates into.
pub fn classify_khoi(point: &KhoiPoint) -> Result<KhoiClass, CertifyError> {
    match point {
        KhoiPoint::Real { t, u } => {
            if !t.is_finite() || !u.is_finite() {
                return Err(CertifyError::Inadmissible("non-finite coordinates".into()));
            }
            if t.is_zero() {
                return Err(CertifyError::Inadmissible("t = 0".into()));
            }
            if *t == 1 {
                return Err(CertifyError::Inadmissible(
                    "t = 1 admits no non-abelian solutions".into(),
                ));
            }
            if *t == -1 {
                return Ok(KhoiClass::TMinusOne);
            }
            Ok(KhoiClass::RealHyperbolic)
        }
        KhoiPoint::UnitCircle { theta, u } => {
            let bits = theta.prec().max(u.prec());
            let pi = Float::with_val(bits, rug::float::Constant::Pi);
            if !theta.is_finite() || !u.is_finite() || *theta <= 0 || *theta >= pi {
                return Err(CertifyError::Inadmissible(format!(
                    "theta = {} is outside (0, pi)",
                    format_decimal(theta, 20)
                )));
            }
            if u.cmp0() == Some(Ordering::Greater) {
                return Ok(KhoiClass::UnitCircleElliptic);
            }
            let bound = -(Float::with_val(bits, theta.sin_ref()).square() * 4u32);
            if *u < bound {
                return Ok(KhoiClass::UnitCircleElliptic);
            }
            Err(CertifyError::Inadmissible(format!(
                "u = {} lies in [-4 sin^2(theta), 0] = [{}, 0]",
                format_decimal(u, 20),
                format_decimal(&bound, 20)
            )))
        }
    }
}

/// Hypotheses of the lifting criterion for a one-parameter family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LiftingFlags {
    /// `|t + 1/t| > 2`.
    pub peripheral_hyperbolic: bool,
    /// Some `1/n` lies in the slope span of the parent branch.
    pub family_contains_inverse_integer_slope: bool,
    /// The parent branch carries residual and guard certificates at every point.
    pub family_continuous: bool,
}

impl LiftingFlags {
    pub fn all(&self) -> bool {
        self.peripheral_hyperbolic && self.family_contains_inverse_integer_slope && self.family_continuous
    }

    fn to_json(self) -> Value {
        json!({
            "peripheral_hyperbolic": self.peripheral_hyperbolic,
            "family_contains_inverse_integer_slope": self.family_contains_inverse_integer_slope,
            "family_continuous": self.family_continuous,
            "universal_cover_claim": self.all(),
        })
    }
}

pub fn lifting_flags(branch: &Branch, t: &Float) -> LiftingFlags {
    let bits = t.prec() + 16;
    let trace = Float::with_val(bits, t + Float::with_val(bits, t.recip_ref())).abs();
    let contains = slope_span(branch).is_some_and(|(inf, sup, _)| contains_inverse_integer(&inf, &sup));
    LiftingFlags {
        peripheral_hyperbolic: trace > 2,
        family_contains_inverse_integer_slope: contains,
        family_continuous: branch.points.len() >= 2 && branch.is_certified(),
    }
}

/// Whether `[inf, sup]` contains `1/n` for a nonzero integer `n`.
fn contains_inverse_integer(inf: &Float, sup: &Float) -> bool {
    let check = |x: &Float| *inf <= *x && *x <= *sup;
    let bits = inf.prec().max(sup.prec());
    let mut hit = false;
    if sup.cmp0() == Some(Ordering::Greater) {
        let n = Float::with_val(bits, sup.recip_ref()).ceil();
        hit |= check(&Float::with_val(bits, n.recip_ref()));
    }
    if inf.cmp0() == Some(Ordering::Less) {
        let n = Float::with_val(bits, inf.recip_ref()).floor();
        hit |= check(&Float::with_val(bits, n.recip_ref()));
    }
    hit
}

/// Emission and revalidation thresholds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CertifyPolicy {
    pub precision: Precision,
    /// Bound on both residuals of a point before it is certified.
    pub emission_tol: f64,
    /// Bound on both residuals when re-read from the stored decimals.
    pub revalidation_tol: f64,
}

impl CertifyPolicy {
    /// `1e-30` / `1e-60` at 50 digits, scaled with the precision.
    pub fn for_precision(precision: Precision) -> Self {
        let digits = precision.decimal_digits() as f64;
        CertifyPolicy {
            precision,
            emission_tol: 10f64.powf(-0.6 * digits),
            revalidation_tol: 10f64.powf(-1.2 * digits),
        }
    }

    pub fn revalidation_precision(&self) -> Precision {
        self.precision.doubled()
    }

    /// Digits written for `t` and `u`.
    pub fn stored_digits(&self) -> u32 {
        self.revalidation_precision().decimal_digits() + 10
    }
}

impl Default for CertifyPolicy {
    fn default() -> Self {
        CertifyPolicy::for_precision(Precision::default())
    }
}

/// A self-contained witness that slope `r` surgery admits a real
/// representation.
#[derive(Clone, Debug, PartialEq)]
pub struct SlopeCertificate {
    pub knot: TwoBridgeKnot,
    pub slope: Rational,
    pub t: String,
    pub u: String,
    pub residual_p: String,
    pub residual_slope: String,
    pub khoi_class: KhoiClass,
    pub lifting: LiftingFlags,
    pub precision_digits: u32,
    pub emission_tol: f64,
    pub revalidation_tol: f64,
    pub revalidation_digits: u32,
    pub sampled_points: usize,
    pub min_guard: String,
}

impl SlopeCertificate {
    pub fn to_json(&self) -> Value {
        json!({
            "knot": { "p": self.knot.p(), "q": self.knot.q() },
            "slope": { "num": self.slope.numer().to_string(), "den": self.slope.denom().to_string() },
            "point": { "t": self.t, "u": self.u },
            "residuals": { "P": self.residual_p, "slope": self.residual_slope },
            "khoi_class": self.khoi_class.as_str(),
            "lifting": self.lifting.to_json(),
            "meta": {
                "precision_digits": self.precision_digits,
                "tolerances": {
                    "emission": format!("{:e}", self.emission_tol),
                    "revalidation": format!("{:e}", self.revalidation_tol),
                    "revalidation_digits": self.revalidation_digits,
                },
                "basis": format!(
                    "hypotheses verified at {} sampled points with IFT guard bounds (min |guard| = {})",
                    self.sampled_points, self.min_guard
                ),
            },
        })
    }

    /// Reads back the fields [`to_json`](Self::to_json) writes.
    pub fn from_json(value: &Value) -> Result<Self, CertifyError> {
        let bad = |what: &str| {
            CertifyError::Format(crate::error::FormatError::Number {
                text: what.to_string(),
                reason: "missing or malformed certificate field".into(),
            })
        };
        let int = |v: &Value| v.as_i64().ok_or_else(|| bad("integer"));
        let text = |v: &Value, what: &str| v.as_str().map(str::to_string).ok_or_else(|| bad(what));
        let knot = crate::knotspec::validate_knot(int(&value["knot"]["p"])?, int(&value["knot"]["q"])?)
            .map_err(|e| bad(&e.to_string()))?;
        let num: Integer = text(&value["slope"]["num"], "slope.num")?
            .parse()
            .map_err(|_| bad("slope.num"))?;
        let den: Integer = text(&value["slope"]["den"], "slope.den")?
            .parse()
            .map_err(|_| bad("slope.den"))?;
        if den == 0 {
            return Err(bad("slope.den"));
        }
        let khoi_class = match value["khoi_class"].as_str() {
            Some("real_hyperbolic") => KhoiClass::RealHyperbolic,
            Some("unit_circle_elliptic") => KhoiClass::UnitCircleElliptic,
            Some("t_minus_one") => KhoiClass::TMinusOne,
            _ => return Err(bad("khoi_class")),
        };
        let flag = |k: &str| value["lifting"][k].as_bool().ok_or_else(|| bad(k));
        let meta = &value["meta"];
        let tol =
            |k: &str| -> Result<f64, CertifyError> { text(&meta["tolerances"][k], k)?.parse().map_err(|_| bad(k)) };
        Ok(SlopeCertificate {
            knot,
            slope: Rational::from((num, den)),
            t: text(&value["point"]["t"], "point.t")?,
            u: text(&value["point"]["u"], "point.u")?,
            residual_p: text(&value["residuals"]["P"], "residuals.P")?,
            residual_slope: text(&value["residuals"]["slope"], "residuals.slope")?,
            khoi_class,
            lifting: LiftingFlags {
                peripheral_hyperbolic: flag("peripheral_hyperbolic")?,
                family_contains_inverse_integer_slope: flag("family_contains_inverse_integer_slope")?,
                family_continuous: flag("family_continuous")?,
            },
            precision_digits: meta["precision_digits"]
                .as_u64()
                .ok_or_else(|| bad("precision_digits"))? as u32,
            emission_tol: tol("emission")?,
            revalidation_tol: tol("revalidation")?,
            revalidation_digits: meta["tolerances"]["revalidation_digits"]
                .as_u64()
                .ok_or_else(|| bad("revalidation_digits"))? as u32,
            sampled_points: 0,
            min_guard: String::new(),
        })
    }
}

/// Residuals of a stored certificate, recomputed from its text alone.
#[derive(Clone, Debug, PartialEq)]
pub struct Revalidation {
    pub residual_p: Float,
    pub residual_slope: Float,
}

fn residuals(
    sys: &RileySystem,
    t: &Float,
    u: &Float,
    r: &Rational,
    precision: Precision,
) -> Result<(Float, Float), CertifyError> {
    let bits = precision.bits();
    let p = Float::with_val(bits, eval_float_exact(&sys.p, t, u).map_err(TraceError::from)?).abs();
    let s = slope_residual(sys, t, u, &Float::with_val(bits, r), precision)?.abs();
    Ok((p, s))
}

fn check(what: &'static str, value: &Float, tol: f64) -> Result<(), CertifyError> {
    if *value <= tol {
        Ok(())
    } else {
        Err(CertifyError::RecheckFailed {
            what,
            value: format_decimal(value, 6),
            tolerance: format!("{tol:e}"),
        })
    }
}

/// Parses the stored point and checks both residuals at the revalidation
/// precision.
pub fn revalidate(cert: &SlopeCertificate) -> Result<Revalidation, CertifyError> {
    let sys = riley_system(&cert.knot);
    let precision = Precision::digits(cert.revalidation_digits);
    let read_bits = Precision::digits(cert.revalidation_digits + 20).bits();
    let t = parse_decimal(&cert.t, read_bits)?;
    let u = parse_decimal(&cert.u, read_bits)?;
    let (p, s) = residuals(&sys, &t, &u, &cert.slope, precision)?;
    check("P", &p, cert.revalidation_tol)?;
    check("slope", &s, cert.revalidation_tol)?;
    Ok(Revalidation {
        residual_p: p,
        residual_slope: s,
    })
}

/// Certifies that `point` of `branch` realizes slope `slope`.
pub fn make_certificate(
    sys: &RileySystem,
    branch: &Branch,
    point: &CurvePoint,
    slope: &Rational,
    policy: &CertifyPolicy,
) -> Result<SlopeCertificate, CertifyError> {
    let knot = *sys.knot();
    let class = classify_khoi(&KhoiPoint::Real {
        t: point.t.clone(),
        u: point.u.clone(),
    })?;
    let hi = policy.revalidation_precision();
    let point_slope = point.slope.clone().ok_or_else(|| CertifyError::SlopeMismatch {
        slope: format_rational(slope),
        point_slope: "undefined".into(),
    })?;
    let bits = point_slope.prec();
    let gap = Float::with_val(bits, &point_slope - Float::with_val(bits, slope)).abs()
        * Float::with_val(bits, point.t.ln_ref()).abs();
    if gap > policy.emission_tol {
        return Err(CertifyError::SlopeMismatch {
            slope: format_rational(slope),
            point_slope: format_decimal(&point_slope, 20),
        });
    }
    let (p, s) = residuals(sys, &point.t, &point.u, slope, hi)?;
    check("P", &p, policy.emission_tol)?;
    check("slope", &s, policy.emission_tol)?;

    let (t, u) = polish_slope_point(sys, &point.t, &point.u, slope, hi.bits(), policy.revalidation_tol, 1024)?;
    let digits = policy.stored_digits();
    let mut cert = SlopeCertificate {
        knot,
        slope: slope.clone(),
        t: format_decimal(&t, digits),
        u: format_decimal(&u, digits),
        residual_p: String::new(),
        residual_slope: String::new(),
        khoi_class: class,
        lifting: lifting_flags(branch, &t),
        precision_digits: policy.precision.decimal_digits(),
        emission_tol: policy.emission_tol,
        revalidation_tol: policy.revalidation_tol,
        revalidation_digits: hi.decimal_digits(),
        sampled_points: branch.points.len(),
        min_guard: format_decimal(&branch.min_guard, 6),
    };
    let check = revalidate(&cert)?;
    cert.residual_p = format_decimal(&check.residual_p, 6);
    cert.residual_slope = format_decimal(&check.residual_slope, 6);
    Ok(cert)
}

type FMat = [[Float; 2]; 2];

fn fmul(a: &FMat, b: &FMat, bits: u32) -> FMat {
    let e =
        |i: usize, j: usize| Float::with_val(bits, &a[i][0] * &b[0][j]) + Float::with_val(bits, &a[i][1] * &b[1][j]);
    [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]]
}

fn max_entry_diff(a: &FMat, b: &FMat, bits: u32) -> Float {
    let mut m = Float::new(bits);
    for i in 0..2 {
        for j in 0..2 {
            let d = Float::with_val(bits, &a[i][j] - &b[i][j]).abs();
            if d > m {
                m = d;
            }
        }
    }
    m
}

/// `[[s, (s - 1/s)/(t - 1/t)], [0, 1/s]]`.
fn meridian_power(s: &Float, t: &Float, bits: u32) -> FMat {
    let si = Float::with_val(bits, s.recip_ref());
    let ti = Float::with_val(bits, t.recip_ref());
    let top = Float::with_val(bits, s - &si) / Float::with_val(bits, t - &ti);
    [[Float::with_val(bits, s), top], [Float::new(bits), si]]
}

/// `t^(α/β)`, computed as an integer power when `β = 1`.
fn fractional_power(t: &Float, alpha: i64, beta: u64, bits: u32) -> Float {
    if beta == 1 {
        Float::with_val(bits, Pow::pow(t, alpha as i32))
    } else {
        let e = Float::with_val(bits, Rational::from((alpha, beta)));
        Float::with_val(bits, Pow::pow(t, &e))
    }
}

/// The rational meridian power `C_{α/β}` at `t`.
pub fn rational_meridian(t: &Float, alpha: i64, beta: u64, precision: Precision) -> [[Float; 2]; 2] {
    let bits = precision.bits();
    meridian_power(&fractional_power(t, alpha, beta, bits), t, bits)
}

/// `max |C_{α/β}^β - C^α|` over the entries.
pub fn rational_peripheral_check(t: &Float, alpha: i64, beta: u64, precision: Precision) -> Float {
    let bits = precision.bits();
    let root = rational_meridian(t, alpha, beta, precision);
    let mut acc = root.clone();
    for _ in 1..beta {
        acc = fmul(&acc, &root, bits);
    }
    let direct = meridian_power(&Float::with_val(bits, Pow::pow(t, alpha as i32)), t, bits);
    max_entry_diff(&acc, &direct, bits)
}

fn eval_matrix(m: &Mat2, t: &Float, u: &Float, bits: u32) -> Result<FMat, CertifyError> {
    let e = |i: usize, j: usize| -> Result<Float, CertifyError> {
        Ok(Float::with_val(
            bits,
            eval_float_exact(&m.entries[i][j], t, u).map_err(TraceError::from)?,
        ))
    };
    Ok([[e(0, 0)?, e(0, 1)?], [e(1, 0)?, e(1, 1)?]])
}

/// `max |C_{α/β} L - L C_{α/β}|` with `L = W* W` evaluated at `(t, u)`.
pub fn commutator_residual(
    sys: &RileySystem,
    t: &Float,
    u: &Float,
    alpha: i64,
    beta: u64,
    precision: Precision,
) -> Result<Float, CertifyError> {
    let bits = precision.bits();
    let w = eval_matrix(&word_matrix(sys.knot(), false), t, u, bits)?;
    let ws = eval_matrix(&word_matrix(sys.knot(), true), t, u, bits)?;
    let longitude = fmul(&ws, &w, bits);
    let c = rational_meridian(t, alpha, beta, precision);
    Ok(max_entry_diff(
        &fmul(&c, &longitude, bits),
        &fmul(&longitude, &c, bits),
        bits,
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IrreducibilityBasis {
    NonTorusTwoBridge,
    NotApplicable,
}

/// One end of a claimed slope interval.
#[derive(Clone, Debug, PartialEq)]
pub struct Endpoint {
    /// Exact limit when asymptotic, otherwise the extreme sampled slope.
    pub value: String,
    pub open: bool,
    pub asymptotic: bool,
    /// Extreme slope actually reached along the branches.
    pub reached: Float,
    /// The limit as a rational, when it snapped to one.
    pub limit: Option<Rational>,
}

impl Endpoint {
    fn to_json(&self) -> Value {
        json!({
            "value": self.value,
            "open": self.open,
            "asymptotic": self.asymptotic,
            "reached": format_decimal(&self.reached, 20),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BranchSummary {
    pub parameterization: Parameterization,
    pub direction: Direction,
    pub stop: StopReason,
    pub points: usize,
    pub slope_inf: Float,
    pub slope_sup: Float,
    pub monotonic: bool,
    pub certified: bool,
    pub tail_limit: Option<Rational>,
}

#[derive(Clone, Debug)]
pub struct IntervalReport {
    pub knot: TwoBridgeKnot,
    pub certificates: Vec<SlopeCertificate>,
    pub lo: Endpoint,
    pub hi: Endpoint,
    pub irreducibility_basis: IrreducibilityBasis,
    pub zero_slope_note: bool,
    pub branches: Vec<BranchSummary>,
    pub policy: CertifyPolicy,
}

impl IntervalReport {
    pub fn to_json(&self) -> Value {
        let basis = match self.irreducibility_basis {
            IrreducibilityBasis::NonTorusTwoBridge => "non_torus_two_bridge",
            IrreducibilityBasis::NotApplicable => "not_applicable",
        };
        let branches: Vec<Value> = self
            .branches
            .iter()
            .map(|b| {
                json!({
                    "parameterization": serde_json::to_value(b.parameterization).expect("enum"),
                    "direction": serde_json::to_value(b.direction).expect("enum"),
                    "stop": serde_json::to_value(b.stop).expect("enum"),
                    "points": b.points,
                    "slope_inf": format_decimal(&b.slope_inf, 20),
                    "slope_sup": format_decimal(&b.slope_sup, 20),
                    "monotonic": b.monotonic,
                    "certified": b.certified,
                    "tail_limit": b.tail_limit.as_ref().map(format_rational),
                })
            })
            .collect();
        json!({
            "knot": { "p": self.knot.p(), "q": self.knot.q() },
            "certificates": self.certificates.iter().map(SlopeCertificate::to_json).collect::<Vec<_>>(),
            "claimed_interval": { "lo": self.lo.to_json(), "hi": self.hi.to_json() },
            "irreducibility_basis": basis,
            "zero_slope_note": if self.zero_slope_note {
                Value::String("slope 0: the surgery has first homology Z and is handled without a representation".into())
            } else {
                Value::Null
            },
            "branches": branches,
            "meta": {
                "precision_digits": self.policy.precision.decimal_digits(),
                "tolerances": {
                    "emission": format!("{:e}", self.policy.emission_tol),
                    "revalidation": format!("{:e}", self.policy.revalidation_tol),
                },
            },
        })
    }
}

/// Closest rational with denominator at most 12.
fn snap(x: f64) -> Option<Rational> {
    let mut best: Option<(f64, Rational)> = None;
    for den in 1..=12i64 {
        let num = (x * den as f64).round();
        let err = (x - num / den as f64).abs();
        if best.as_ref().map_or(true, |(e, _)| err < *e - 1e-15) {
            best = Some((err, Rational::from((num as i64, den))));
        }
    }
    best.filter(|(e, _)| *e <= 1e-6 * x.abs().max(1.0)).map(|(_, r)| r)
}

/// The limit of the slope at the far end of a branch that ran off to
/// `t → ∞`. Fits `r = L + c t^-k` through the last point and the branch
/// points nearest `t/4` and `t/16`.
pub fn tail_limit(branch: &Branch) -> Option<Rational> {
    if !matches!(branch.stop, StopReason::ParameterLimit | StopReason::TLimit) {
        return None;
    }
    let last = branch.last();
    if last.t < 100 {
        return None;
    }
    let tc = last.t.to_f64();
    let nearest = |target: f64| {
        branch.points.iter().filter(|p| p.slope.is_some()).min_by(|a, b| {
            let da = (a.t.to_f64().ln() - target.ln()).abs();
            let db = (b.t.to_f64().ln() - target.ln()).abs();
            da.partial_cmp(&db).unwrap_or(Ordering::Equal)
        })
    };
    let a = nearest(tc / 16.0)?;
    let b = nearest(tc / 4.0)?;
    let sample = |p: &CurvePoint| (p.t.to_f64() / tc, p.slope.as_ref().expect("filtered").to_f64());
    let ((xa, ra), (xb, rb), rc) = (sample(a), sample(b), last.slope.as_ref()?.to_f64());
    if !(xa < xb && xb < 1.0) {
        return None;
    }
    let ratio = (ra - rb) / (rb - rc);
    let model = |k: f64| (xa.powf(-k) - xb.powf(-k)) / (xb.powf(-k) - 1.0);
    if !ratio.is_finite() || ratio <= model(1e-3) || ratio >= model(20.0) {
        return None;
    }
    let (mut lo, mut hi) = (1e-3, 20.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if model(mid) < ratio {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let k = 0.5 * (lo + hi);
    let c = (rb - rc) / (xb.powf(-k) - 1.0);
    snap(rc - c)
}

fn is_member(r: &Rational, inf: &Float, sup: &Float) -> bool {
    let bits = inf.prec().max(sup.prec()) + 64;
    let rf = Float::with_val(bits, r);
    *inf <= rf && rf <= *sup
}

fn certify_on_spans(
    sys: &RileySystem,
    branches: &[Branch],
    spans: &[Option<(Float, Float, bool)>],
    r: &Rational,
    policy: &CertifyPolicy,
    cfg: &TraceConfig,
) -> Result<SlopeCertificate, CertifyError> {
    let bits = 128;
    let (mut lo, mut hi): (Option<Float>, Option<Float>) = (None, None);
    for (inf, sup, _) in spans.iter().flatten() {
        if lo.as_ref().map_or(true, |l| inf < l) {
            lo = Some(Float::with_val(bits, inf));
        }
        if hi.as_ref().map_or(true, |h| sup > h) {
            hi = Some(Float::with_val(bits, sup));
        }
    }
    if let (Some(lo), Some(hi)) = (&lo, &hi) {
        if !is_member(r, lo, hi) {
            return Err(TraceError::OutOfRange {
                requested: format_rational(r),
                inf: format_decimal(lo, 20),
                sup: format_decimal(hi, 20),
            }
            .into());
        }
    }
    let mut last_err = CertifyError::Uncovered(format_rational(r));
    for (b, span) in branches.iter().zip(spans) {
        let Some((inf, sup, _)) = span else { continue };
        if !is_member(r, inf, sup) {
            continue;
        }
        let attempt = solve_slope(b, sys, r, cfg)
            .map_err(CertifyError::from)
            .and_then(|point| make_certificate(sys, b, &point, r, policy));
        match attempt {
            Ok(cert) => return Ok(cert),
            Err(e) => last_err = e,
        }
    }
    Err(last_err)
}

/// Certifies slope `r` on the first branch whose span covers it.
pub fn certify_slope(
    sys: &RileySystem,
    branches: &[Branch],
    r: &Rational,
    policy: &CertifyPolicy,
    cfg: &TraceConfig,
) -> Result<SlopeCertificate, CertifyError> {
    let spans: Vec<_> = branches.iter().map(slope_span).collect();
    certify_on_spans(sys, branches, &spans, r, policy, cfg)
}

/// Certifies each sample slope on the first branch covering it and
/// assembles the claimed interval from the branch spans.
pub fn interval_report(
    sys: &RileySystem,
    branches: &[Branch],
    samples: &[Rational],
    policy: &CertifyPolicy,
    cfg: &TraceConfig,
) -> Result<IntervalReport, CertifyError> {
    let knot = *sys.knot();
    if knot.is_torus() {
        return Err(CertifyError::TorusKnot {
            p: knot.p(),
            q: knot.q(),
        });
    }
    let mut wanted: Vec<Rational> = samples
        .iter()
        .filter(|r| r.cmp0() != Ordering::Equal)
        .cloned()
        .collect();
    wanted.sort();
    wanted.dedup();
    let zero_slope_note = samples.iter().any(|r| r.cmp0() == Ordering::Equal);

    let spans: Vec<Option<(Float, Float, bool)>> = branches.iter().map(slope_span).collect();
    let mut certificates = wanted
        .par_iter()
        .map(|r| certify_on_spans(sys, branches, &spans, r, policy, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    certificates.sort_by(|a, b| a.slope.cmp(&b.slope));

    let mut summaries = Vec::new();
    for (b, span) in branches.iter().zip(&spans) {
        let Some((inf, sup, monotonic)) = span.clone() else {
            continue;
        };
        summaries.push(BranchSummary {
            parameterization: b.parameterization,
            direction: b.direction,
            stop: b.stop,
            points: b.points.len(),
            slope_inf: inf,
            slope_sup: sup,
            monotonic,
            certified: b.is_certified(),
            tail_limit: tail_limit(b),
        });
    }
    if summaries.is_empty() {
        return Err(CertifyError::Uncovered("no branch carries slopes".into()));
    }

    let mut order: Vec<&BranchSummary> = summaries.iter().collect();
    order.sort_by(|a, b| a.slope_inf.partial_cmp(&b.slope_inf).unwrap_or(Ordering::Equal));
    let mut reach = order[0].slope_sup.clone();
    for s in &order[1..] {
        if Float::with_val(reach.prec(), &s.slope_inf - &reach) > 1e-20 {
            return Err(CertifyError::DisconnectedSpans);
        }
        if s.slope_sup > reach {
            reach = s.slope_sup.clone();
        }
    }
    let lo_branch = order[0];
    let hi_branch = summaries
        .iter()
        .max_by(|a, b| a.slope_sup.partial_cmp(&b.slope_sup).unwrap_or(Ordering::Equal))
        .expect("non-empty");

    let endpoint = |s: &BranchSummary, reached: &Float, low: bool| -> Endpoint {
        let limit = s.tail_limit.clone().filter(|l| {
            let lf = Float::with_val(reached.prec() + 64, l);
            if low {
                lf <= *reached
            } else {
                lf >= *reached
            }
        });
        match limit {
            Some(l) => Endpoint {
                value: format_rational(&l),
                open: true,
                asymptotic: true,
                reached: reached.clone(),
                limit: Some(l),
            },
            None => Endpoint {
                value: format_decimal(reached, 20),
                open: false,
                asymptotic: false,
                reached: reached.clone(),
                limit: None,
            },
        }
    };
    let lo = endpoint(lo_branch, &lo_branch.slope_inf, true);
    let hi = endpoint(hi_branch, &hi_branch.slope_sup, false);

    Ok(IntervalReport {
        knot,
        certificates,
        lo,
        hi,
        irreducibility_basis: IrreducibilityBasis::NonTorusTwoBridge,
        zero_slope_note,
        branches: summaries,
        policy: *policy,
    })
}

/// Interval carried back along a degree-`d` map: `p/q ↦ p/(dq)`.
pub fn transfer_interval_for_degree(
    d: i64,
    source: &(Rational, Rational),
) -> Result<(Rational, Rational), CertifyError> {
    if d % 2 == 0 {
        return Err(CertifyError::EvenD(d));
    }
    let (lo, hi) = source;
    Ok(if d > 0 {
        (Rational::from(lo * d), Rational::from(hi * d))
    } else {
        (Rational::from(hi * d), Rational::from(lo * d))
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransferCertificate {
    pub family: WangFamilySpec,
    pub d: i64,
    /// The knot of the family, when its continued fraction has no zero entry.
    pub knot: Option<TwoBridgeKnot>,
    pub continued_fraction: Option<Vec<i64>>,
    pub source_interval: (Rational, Rational),
    pub transferred_interval: (Rational, Rational),
}

impl TransferCertificate {
    pub fn to_json(&self) -> Value {
        let interval = |(lo, hi): &(Rational, Rational)| json!({ "lo": format_rational(lo), "hi": format_rational(hi), "open": true });
        json!({
            "family": {
                "base": self.family.base.entries(),
                "c": self.family.c,
                "eps": self.family.eps,
            },
            "d": self.d,
            "knot": self.knot.map(|k| json!({ "p": k.p(), "q": k.q() })),
            "continued_fraction": self.continued_fraction,
            "source_interval": interval(&self.source_interval),
            "transferred_interval": interval(&self.transferred_interval),
            "slope_map": format!("p/q -> p/({} q)", self.d),
        })
    }
}

pub fn transfer_interval(
    family: &WangFamilySpec,
    source: &(Rational, Rational),
) -> Result<TransferCertificate, CertifyError> {
    let d = family.d();
    let transferred = transfer_interval_for_degree(d, source)?;
    let realized = wang_family(family).ok();
    let knot = realized.as_ref().and_then(|(cf, _)| cf_to_pq(cf).ok());
    Ok(TransferCertificate {
        family: family.clone(),
        d,
        knot,
        continued_fraction: realized.map(|(cf, _)| cf.entries().to_vec()),
        source_interval: source.clone(),
        transferred_interval: transferred,
    })
}
