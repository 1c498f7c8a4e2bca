//! Predictor-corrector tracing of real branches of `{P(t, u) = 0}` and
//! location of points realizing a prescribed slope.

use std::cmp::Ordering;
use std::fmt::Write as _;

use rayon::prelude::*;
use rug::ops::Pow;
use rug::{Float, Rational};
use serde::{Deserialize, Serialize};

use crate::error::TraceError;
use crate::laurent::{eval_float_exact, BivarPoly};
use crate::numeric::{float_to_rational, format_decimal, Precision};
use crate::riley::{eval_at, slope_of_point, slope_residual, RileySystem};
use crate::roots::{isolate_above, isolate_in, refine_root, RatPoly, RootInterval};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameterization {
    ByT,
    ByU,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Increasing,
    Decreasing,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Increasing => 1.0,
            Direction::Decreasing => -1.0,
        }
    }
}

/// Region a traced branch must stay inside.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Band {
    None,
    /// `-t^-4 < u <= 0`.
    InverseQuarticStrip,
    /// `(√u + √(u+4))/2 < t < (√(u+1) + √(u+5))/2` with `u >= 0`, i.e.
    /// `u < (t - 1/t)^2 < u + 1` for `t > 1`.
    SqrtShell,
    Rect {
        t_lo: f64,
        t_hi: f64,
        u_lo: f64,
        u_hi: f64,
    },
}

impl Band {
    /// Exact membership test.
    pub fn contains(&self, t: &Float, u: &Float) -> bool {
        match self {
            Band::None => true,
            Band::InverseQuarticStrip => {
                if *t <= 0 || *u > 0 {
                    return false;
                }
                let t = float_to_rational(t);
                let u = float_to_rational(u);
                // u > -t^-4  <=>  u t^4 + 1 > 0
                (u * t.pow(4u32) + 1u32).cmp0() == Ordering::Greater
            }
            Band::SqrtShell => {
                if *t <= 1 || *u < 0 {
                    return false;
                }
                let tr = float_to_rational(t);
                let inv = Rational::from(tr.recip_ref());
                let tau = Rational::from(&tr - &inv);
                let tau2 = Rational::from(tau.square_ref());
                let u = float_to_rational(u);
                u < tau2 && tau2 < u + 1u32
            }
            Band::Rect { t_lo, t_hi, u_lo, u_hi } => *t > *t_lo && *t < *t_hi && *u > *u_lo && *u < *u_hi,
        }
    }
}

/// A point of `{P = 0}` with the data the certificates need.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvePoint {
    pub t: Float,
    pub u: Float,
    /// `|P(t, u)|`.
    pub residual: Float,
    pub slope: Option<Float>,
    pub dpdu: Float,
    pub dpdt: Float,
}

impl CurvePoint {
    pub fn bits(&self) -> u32 {
        self.t.prec().max(self.u.prec())
    }

    fn guard(&self, param: Parameterization) -> &Float {
        match param {
            Parameterization::ByT => &self.dpdu,
            Parameterization::ByU => &self.dpdt,
        }
    }

    pub fn param(&self, param: Parameterization) -> &Float {
        match param {
            Parameterization::ByT => &self.t,
            Parameterization::ByU => &self.u,
        }
    }
}

/// Evaluates everything stored in a [`CurvePoint`] at `bits`.
pub fn make_point(sys: &RileySystem, t: Float, u: Float, bits: u32) -> Result<CurvePoint, TraceError> {
    let p = eval_at(&sys.p, &t, &u, bits)?;
    let dpdu = eval_at(&sys.dp_du, &t, &u, bits)?;
    let dpdt = eval_at(&sys.dp_dt, &t, &u, bits)?;
    let slope = slope_of_point(sys, &t, &u, precision_for_bits(bits)).ok();
    Ok(CurvePoint {
        residual: p.abs(),
        slope,
        dpdu,
        dpdt,
        t,
        u,
    })
}

fn precision_for_bits(bits: u32) -> Precision {
    Precision::digits(((bits.saturating_sub(8)) as f64 / std::f64::consts::LOG2_10).floor() as u32)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxSteps,
    /// The parameter reached its configured bound.
    ParameterLimit,
    /// The dependent `t` left `(1, t_max]`.
    TLimit,
    BandExit,
    /// The guard derivative shrank or changed sign: a fold of the branch.
    GuardDegenerate,
    StepUnderflow,
}

#[derive(Clone, Debug)]
pub struct TraceConfig {
    /// Initial parameter step.
    pub step: f64,
    /// Smallest step, relative to `max(1, |parameter|)`.
    pub min_step: f64,
    pub tol_residual: f64,
    /// Relative size of the last Newton correction.
    pub tol_newton: f64,
    pub max_steps: usize,
    pub max_newton: usize,
    pub band: Band,
    pub t_max: f64,
    pub u_max: f64,
    pub guard_floor: f64,
    /// Step shrink factor on rejection, in (0, 1).
    pub adaptation: f64,
    pub growth: f64,
    /// Largest accepted slope change between neighbouring points.
    pub max_slope_jump: f64,
    pub precision: Precision,
    /// Extra mantissa bits the corrector may add to reach `tol_residual`.
    pub max_extra_bits: u32,
}

impl TraceConfig {
    /// Tolerances scaled to the working precision (`1e-30` residual at
    /// 50 digits).
    pub fn for_precision(precision: Precision) -> Self {
        let digits = precision.decimal_digits() as f64;
        TraceConfig {
            step: 1e-2,
            min_step: 1e-13,
            tol_residual: 10f64.powf(-0.6 * digits),
            tol_newton: 10f64.powf(-0.8 * digits),
            max_steps: 20_000,
            max_newton: 40,
            band: Band::None,
            t_max: 1e3,
            u_max: 1e6,
            guard_floor: 10f64.powf(-0.5 * digits),
            adaptation: 0.5,
            growth: 1.5,
            max_slope_jump: 0.25,
            precision,
            max_extra_bits: 1024,
        }
    }

    fn validate(&self) -> Result<(), TraceError> {
        let ok = self.step > 0.0
            && self.min_step > 0.0
            && self.tol_residual > 0.0
            && self.tol_newton > 0.0
            && self.adaptation > 0.0
            && self.adaptation < 1.0
            && self.growth >= 1.0;
        if ok {
            Ok(())
        } else {
            Err(TraceError::CorrectorDiverged("invalid trace configuration".into()))
        }
    }
}

impl Default for TraceConfig {
    fn default() -> Self {
        TraceConfig::for_precision(Precision::default())
    }
}

#[derive(Clone, Debug)]
pub struct Branch {
    pub points: Vec<CurvePoint>,
    pub parameterization: Parameterization,
    pub direction: Direction,
    pub band: Band,
    pub seed: CurvePoint,
    pub stop: StopReason,
    /// Smallest `|guard|` over accepted points.
    pub min_guard: Float,
    pub tol_residual: f64,
    pub precision: Precision,
}

impl Branch {
    /// Every point meets the residual tolerance, stays in the band, and the
    /// guard keeps one strict sign.
    pub fn is_certified(&self) -> bool {
        let sign = self.seed.guard(self.parameterization).cmp0();
        sign.is_some_and(|s| s != Ordering::Equal)
            && self.points.iter().all(|p| {
                p.residual <= self.tol_residual
                    && p.guard(self.parameterization).cmp0() == sign
                    && self.band.contains(&p.t, &p.u)
            })
    }

    pub fn last(&self) -> &CurvePoint {
        self.points.last().expect("branch has a seed")
    }

    /// CSV with columns `t,u,residual,slope,dPdu,dPdt`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,u,residual,slope,dPdu,dPdt\n");
        for p in &self.points {
            let digits = precision_for_bits(p.bits()).decimal_digits();
            let slope = p.slope.as_ref().map(|s| format_decimal(s, digits)).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                format_decimal(&p.t, digits),
                format_decimal(&p.u, digits),
                format_decimal(&p.residual, 6),
                slope,
                format_decimal(&p.dpdu, digits),
                format_decimal(&p.dpdt, digits)
            );
        }
        out
    }
}

/// `(inf, sup, monotonic)` of the slopes recorded along a branch.
pub fn slope_span(branch: &Branch) -> Option<(Float, Float, bool)> {
    let slopes: Vec<&Float> = branch.points.iter().filter_map(|p| p.slope.as_ref()).collect();
    let first = *slopes.first()?;
    let mut inf = first.clone();
    let mut sup = first.clone();
    let (mut up, mut down) = (true, true);
    for w in slopes.windows(2) {
        match w[1].partial_cmp(w[0]) {
            Some(Ordering::Greater) => down = false,
            Some(Ordering::Less) => up = false,
            _ => {}
        }
        if *w[1] < inf {
            inf = w[1].clone();
        }
        if *w[1] > sup {
            sup = w[1].clone();
        }
    }
    Some((inf, sup, up || down))
}

struct Corrected {
    point: CurvePoint,
}

enum CorrectorFailure {
    Diverged,
    Stalled,
}

/// 1-D Newton on the dependent variable with the parameter held fixed.
/// Raises the working precision when rounding alone keeps the residual
/// above tolerance.
fn correct(
    sys: &RileySystem,
    param: Parameterization,
    x: &Float,
    guess: Float,
    cfg: &TraceConfig,
) -> Result<Corrected, CorrectorFailure> {
    let base_bits = cfg.precision.bits().max(x.prec());
    let mut bits = base_bits;
    let mut y = Float::with_val(bits, &guess);
    let mut x = x.clone();
    let coords = |x: &Float, y: &Float| match param {
        Parameterization::ByT => (x.clone(), y.clone()),
        Parameterization::ByU => (y.clone(), x.clone()),
    };
    let deriv = match param {
        Parameterization::ByT => &sys.dp_du,
        Parameterization::ByU => &sys.dp_dt,
    };
    let mut last_delta: Option<Float> = None;
    let mut small_step = false;
    for it in 0..=cfg.max_newton {
        let (t, u) = coords(&x, &y);
        if t.is_zero() || !y.is_finite() {
            return Err(CorrectorFailure::Diverged);
        }
        let p = eval_at(&sys.p, &t, &u, bits).map_err(|_| CorrectorFailure::Diverged)?;
        if p.is_zero() || (small_step && p.clone().abs() <= cfg.tol_residual) {
            let point = make_point(sys, t, u, bits).map_err(|_| CorrectorFailure::Diverged)?;
            return Ok(Corrected { point });
        }
        if it == cfg.max_newton {
            break;
        }
        let g = eval_at(deriv, &t, &u, bits).map_err(|_| CorrectorFailure::Diverged)?;
        if g.is_zero() {
            return Err(CorrectorFailure::Diverged);
        }
        let delta = Float::with_val(bits, &p / &g);
        let scale = Float::with_val(bits, y.abs_ref()).max(&Float::with_val(bits, 1));
        if let Some(prev) = &last_delta {
            if it >= 3
                && delta.clone().abs() > prev.clone().abs() * 2u32
                && delta.clone().abs() > Float::with_val(bits, &scale * 1e-8)
            {
                return Err(CorrectorFailure::Diverged);
            }
        }
        y -= &delta;
        let rel = Float::with_val(bits, delta.abs_ref()) / &scale;
        small_step = rel <= cfg.tol_newton;
        // Rounding floor: the correction is at the last few bits yet the
        // residual is still too large, so carry more bits.
        let floor = Float::with_val(bits, 1) >> (bits as i32 - 6);
        if rel <= floor && p.abs() > cfg.tol_residual {
            if bits >= base_bits + cfg.max_extra_bits {
                return Err(CorrectorFailure::Stalled);
            }
            bits += 64;
            y.set_prec(bits);
            x.set_prec(bits);
            small_step = false;
        }
        last_delta = Some(delta);
    }
    Err(CorrectorFailure::Diverged)
}

fn dependent(point: &CurvePoint, param: Parameterization) -> &Float {
    match param {
        Parameterization::ByT => &point.u,
        Parameterization::ByU => &point.t,
    }
}

fn check_seed(
    sys: &RileySystem,
    seed: &CurvePoint,
    param: Parameterization,
    cfg: &TraceConfig,
) -> Result<(), TraceError> {
    let fresh = make_point(sys, seed.t.clone(), seed.u.clone(), seed.bits())?;
    if fresh.residual > cfg.tol_residual {
        return Err(TraceError::SeedResidual(format_decimal(&fresh.residual, 6)));
    }
    let guard = fresh.guard(param).clone().abs();
    if guard < cfg.guard_floor {
        return Err(TraceError::GuardDegenerate {
            t: format_decimal(&seed.t, 20),
            u: format_decimal(&seed.u, 20),
            guard: format_decimal(&guard, 6),
        });
    }
    Ok(())
}

const FOLD_SLOPE: f64 = 1e4;

/// Traces one branch from `seed` in the given parameterization and
/// direction.
pub fn trace_branch(
    sys: &RileySystem,
    seed: &CurvePoint,
    param: Parameterization,
    direction: Direction,
    cfg: &TraceConfig,
) -> Result<Branch, TraceError> {
    cfg.validate()?;
    check_seed(sys, seed, param, cfg)?;
    let guard_sign = seed.guard(param).cmp0();
    let mut points = vec![seed.clone()];
    let mut min_guard = seed.guard(param).clone().abs();
    let mut h = cfg.step * direction.sign();
    let stop = loop {
        if points.len() > cfg.max_steps {
            break StopReason::MaxSteps;
        }
        let cur = points.last().expect("nonempty");
        let x0 = cur.param(param).clone();
        let y0 = dependent(cur, param).clone();
        let bits = x0.prec();
        let x0f = x0.to_f64();
        let min_h = cfg.min_step * x0f.abs().max(1.0);
        if h.abs() < min_h {
            break StopReason::StepUnderflow;
        }
        let limit = match param {
            Parameterization::ByT if h > 0.0 => cfg.t_max,
            Parameterization::ByT => 1.0,
            Parameterization::ByU => cfg.u_max * direction.sign(),
        };
        let mut x1 = Float::with_val(bits, &x0 + h);
        let mut final_step = false;
        if (h > 0.0 && x1 >= limit) || (h < 0.0 && x1 <= limit) {
            if param == Parameterization::ByT && h < 0.0 {
                // t must stay above 1; approach it geometrically.
                let gap = x0f - 1.0;
                if gap <= min_h {
                    break StopReason::ParameterLimit;
                }
                h = -gap / 2.0;
                x1 = Float::with_val(bits, &x0 + h);
            } else {
                x1 = Float::with_val(bits, limit);
                final_step = true;
                if x1 == x0 {
                    break StopReason::ParameterLimit;
                }
            }
        }
        let hx = Float::with_val(bits, &x1 - &x0);
        let param_deriv = match param {
            Parameterization::ByT => &cur.dpdt,
            Parameterization::ByU => &cur.dpdu,
        };
        let tangent = Float::with_val(bits, -param_deriv.clone() / cur.guard(param));
        let mut pred = Float::with_val(bits, &tangent * &hx);
        let cap = y0.to_f64().abs().max(cfg.step) * 0.5;
        if pred.to_f64().abs() > cap && !final_step {
            h *= cfg.adaptation;
            continue;
        }
        pred += &y0;
        let outcome = correct(sys, param, &x1, pred.clone(), cfg);
        let accepted = match outcome {
            Ok(c) => {
                let g = c.point.guard(param);
                let guard_ok = g.cmp0() == guard_sign && g.clone().abs() >= cfg.guard_floor;
                let t_ok = c.point.t > 1;
                let jump_ok = match (&cur.slope, &c.point.slope) {
                    (Some(a), Some(b)) => Float::with_val(bits, a - b).abs() <= cfg.max_slope_jump,
                    _ => true,
                };
                if !guard_ok {
                    Err(true)
                } else if t_ok && jump_ok {
                    Ok(c)
                } else {
                    Err(false)
                }
            }
            Err(_) => Err(false),
        };
        match accepted {
            Ok(c) => {
                if !cfg.band.contains(&c.point.t, &c.point.u) {
                    break StopReason::BandExit;
                }
                let g = c.point.guard(param).clone().abs();
                if g < min_guard {
                    min_guard = g;
                }
                let t_exit = c.point.t > cfg.t_max;
                // Euler error relative to the change it predicted: ~h^2.
                let moved = Float::with_val(bits, dependent(&c.point, param) - &y0).abs().to_f64();
                let miss = Float::with_val(bits, dependent(&c.point, param) - &pred).abs().to_f64();
                let factor = if miss == 0.0 || moved == 0.0 {
                    cfg.growth
                } else {
                    (0.1 * moved / miss).sqrt().clamp(cfg.adaptation, cfg.growth)
                };
                points.push(c.point);
                if final_step {
                    break StopReason::ParameterLimit;
                }
                if t_exit {
                    break StopReason::TLimit;
                }
                let cap = cfg.step.max(0.25 * x1.to_f64().abs());
                h = (h * factor).clamp(-cap, cap);
            }
            Err(guard_failed) => {
                h *= cfg.adaptation;
                if h.abs() < min_h {
                    // A near-vertical tangent means the branch folds over
                    // the parameter axis.
                    let steep = tangent.clone().abs().to_f64() > FOLD_SLOPE * y0.to_f64().abs().max(1.0);
                    break if guard_failed || steep {
                        StopReason::GuardDegenerate
                    } else {
                        StopReason::StepUnderflow
                    };
                }
            }
        }
    };
    Ok(Branch {
        seed: seed.clone(),
        points,
        parameterization: param,
        direction,
        band: cfg.band.clone(),
        stop,
        min_guard,
        tol_residual: cfg.tol_residual,
        precision: cfg.precision,
    })
}

/// Real roots `t > 1` of a Laurent polynomial free of `u`.
fn real_roots_above_one(poly: &BivarPoly) -> (RatPoly, Vec<RootInterval>) {
    let (coeffs, _) = poly.to_t_polynomial();
    let rp = RatPoly::from_integers(&coeffs);
    let roots = isolate_above(&rp, &Rational::from(1));
    (rp, roots)
}

fn root_to_float(poly: &RatPoly, root: &RootInterval, bits: u32) -> Float {
    let r = refine_root(poly, root, bits + 16);
    Float::with_val(bits, r.midpoint())
}

/// The seed `(t0, 0)` with `t0` the largest root `t > 1` of `P(t, 0)`.
pub fn seed_psi(sys: &RileySystem, precision: Precision) -> Result<CurvePoint, TraceError> {
    let bits = precision.bits();
    let (rp, roots) = real_roots_above_one(&sys.p.subs_u(&BivarPoly::zero()));
    let root = roots
        .last()
        .ok_or_else(|| TraceError::NoRealSeed("P(t, 0) has no real root t > 1".into()))?;
    let t = root_to_float(&rp, root, bits);
    make_point(sys, t, Float::new(bits), bits)
}

/// Curves through which seeds are looked for.
#[derive(Clone, Debug, PartialEq)]
pub enum SeedSection {
    /// `u = 0`.
    UZero,
    /// `u = (t - t^-1)^2 - 1`.
    ShiftedSquare,
    /// Exact isolation in `u` along `rows` equally spaced rational `t`
    /// values of the rectangle.
    Grid {
        t_lo: Rational,
        t_hi: Rational,
        u_lo: Rational,
        u_hi: Rational,
        rows: u32,
    },
}

/// All seeds with `t > 1` on one section, each within tolerance.
pub fn seeds_on_section(
    sys: &RileySystem,
    section: &SeedSection,
    cfg: &TraceConfig,
) -> Result<Vec<CurvePoint>, TraceError> {
    let bits = cfg.precision.bits();
    let mut out = Vec::new();
    match section {
        SeedSection::UZero => {
            let (rp, roots) = real_roots_above_one(&sys.p.subs_u(&BivarPoly::zero()));
            for r in &roots {
                out.push(make_point(sys, root_to_float(&rp, r, bits), Float::new(bits), bits)?);
            }
        }
        SeedSection::ShiftedSquare => {
            let tm = BivarPoly::t_minus_inverse();
            let shifted = &(&tm * &tm) - &BivarPoly::one();
            let (rp, roots) = real_roots_above_one(&sys.p.subs_u(&shifted));
            for r in &roots {
                let t = root_to_float(&rp, r, bits);
                let guess = eval_at(&shifted, &t, &Float::new(bits), bits)?;
                if let Ok(c) = correct(sys, Parameterization::ByT, &t, guess, cfg) {
                    out.push(c.point);
                }
            }
        }
        SeedSection::Grid {
            t_lo,
            t_hi,
            u_lo,
            u_hi,
            rows,
        } => {
            let rows = (*rows).max(1);
            for i in 0..rows {
                let t = Rational::from(t_hi - t_lo) * Rational::from((2 * i + 1, 2 * rows)) + t_lo;
                if t <= 1 {
                    continue;
                }
                let tf = Float::with_val(bits, &t);
                let up = u_poly_at(&sys.p, &float_to_rational(&tf));
                for r in isolate_in(&up, u_lo, u_hi) {
                    let u = root_to_float(&up, &r, bits);
                    if let Ok(c) = correct(sys, Parameterization::ByT, &tf, u, cfg) {
                        out.push(c.point);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// `u ↦ P(t, u)` at a fixed rational `t`.
fn u_poly_at(p: &BivarPoly, t: &Rational) -> RatPoly {
    let degree = p.u_degree().unwrap_or(0) as usize;
    let mut coeffs = vec![Rational::new(); degree + 1];
    for (e, k, c) in p.terms() {
        let te = if e >= 0 {
            t.clone().pow(e as u32)
        } else {
            Rational::from(t.recip_ref()).pow(e.unsigned_abs())
        };
        coeffs[k as usize] += te * c;
    }
    RatPoly::new(coeffs)
}

/// Seeds from `u = 0`, `u = (t - t^-1)^2 - 1` and an optional grid, with
/// duplicates (agreeing to 20 digits) removed.
pub fn find_seeds(
    sys: &RileySystem,
    grid: Option<SeedSection>,
    cfg: &TraceConfig,
) -> Result<Vec<CurvePoint>, TraceError> {
    let mut sections = vec![SeedSection::UZero, SeedSection::ShiftedSquare];
    sections.extend(grid);
    let mut out: Vec<CurvePoint> = Vec::new();
    for s in &sections {
        for p in seeds_on_section(sys, s, cfg)? {
            let dup = out.iter().any(|q| {
                let dt = Float::with_val(64, &p.t - &q.t).abs();
                let du = Float::with_val(64, &p.u - &q.u).abs();
                dt < 1e-20 && du < 1e-20
            });
            if !dup {
                out.push(p);
            }
        }
    }
    Ok(out)
}

/// Traces every seed of [`find_seeds`] in both parameterizations and both
/// directions. Traces that cannot start (a fold at the seed) are dropped.
pub fn discover_branches(sys: &RileySystem, cfg: &TraceConfig) -> Result<Vec<Branch>, TraceError> {
    let seeds = find_seeds(sys, None, cfg)?;
    if seeds.is_empty() {
        return Err(TraceError::NoRealSeed("no seed on u = 0 or u = (t - 1/t)^2 - 1".into()));
    }
    let mut jobs = Vec::new();
    for seed in &seeds {
        for param in [Parameterization::ByT, Parameterization::ByU] {
            for dir in [Direction::Increasing, Direction::Decreasing] {
                jobs.push((seed, param, dir));
            }
        }
    }
    let traced: Vec<Option<Branch>> = jobs
        .par_iter()
        .map(|&(seed, param, dir)| match trace_branch(sys, seed, param, dir, cfg) {
            Ok(b) if b.points.len() >= 2 => Some(b),
            Ok(_) => None,
            Err(e) => {
                log::debug!("skipping {param:?} {dir:?} trace: {e}");
                None
            }
        })
        .collect();
    Ok(traced.into_iter().flatten().collect())
}

/// Corrects at parameter value `x` starting from `guess`.
pub fn point_at(
    sys: &RileySystem,
    param: Parameterization,
    x: &Float,
    guess: &Float,
    cfg: &TraceConfig,
) -> Result<CurvePoint, TraceError> {
    correct(sys, param, x, guess.clone(), cfg)
        .map(|c| c.point)
        .map_err(|_| TraceError::CorrectorDiverged(format_decimal(x, 20)))
}

/// Newton on the pair `(P = 0, slope residual = 0)` in `(t, u)`.
pub fn polish_slope_point(
    sys: &RileySystem,
    t: &Float,
    u: &Float,
    r: &Rational,
    bits: u32,
    tol: f64,
    max_extra_bits: u32,
) -> Result<(Float, Float), TraceError> {
    let base = bits;
    let mut bits = bits;
    let mut t = Float::with_val(bits, t);
    let mut u = Float::with_val(bits, u);
    let n = r - Rational::from(2 * sys.sigma());
    for _ in 0..80 {
        let prec = precision_for_bits(bits);
        let f1 = eval_at(&sys.p, &t, &u, bits)?;
        let rf = Float::with_val(bits, r);
        let f2 = slope_residual(sys, &t, &u, &rf, prec)?;
        if f1.clone().abs() <= tol * 1e-3 && f2.clone().abs() <= tol * 1e-3 {
            return Ok((t, u));
        }
        let pt = eval_at(&sys.dp_dt, &t, &u, bits)?;
        let pu = eval_at(&sys.dp_du, &t, &u, bits)?;
        let x = eval_at(&sys.x, &t, &u, bits)?;
        let xt = eval_at(&sys.dx_dt, &t, &u, bits)?;
        let xu = eval_at(&sys.dx_du, &t, &u, bits)?;
        let j21 = Float::with_val(bits, &n / &t) + Float::with_val(bits, &xt / &x);
        let j22 = Float::with_val(bits, &xu / &x);
        let det = Float::with_val(bits, &pt * &j22) - Float::with_val(bits, &pu * &j21);
        if det.is_zero() {
            return Err(TraceError::CorrectorDiverged(format_decimal(&t, 20)));
        }
        let dt = (Float::with_val(bits, &f1 * &j22) - Float::with_val(bits, &pu * &f2)) / &det;
        let du = (Float::with_val(bits, &pt * &f2) - Float::with_val(bits, &j21 * &f1)) / &det;
        t -= &dt;
        u -= &du;
        let floor = Float::with_val(bits, 1) >> (bits as i32 - 6);
        let rel_t =
            Float::with_val(bits, dt.abs_ref()) / Float::with_val(bits, t.abs_ref()).max(&Float::with_val(bits, 1));
        let rel_u =
            Float::with_val(bits, du.abs_ref()) / Float::with_val(bits, u.abs_ref()).max(&Float::with_val(bits, 1));
        if rel_t <= floor && rel_u <= floor {
            if bits >= base + max_extra_bits {
                break;
            }
            bits += 64;
            t.set_prec(bits);
            u.set_prec(bits);
        }
    }
    Err(TraceError::CorrectorDiverged(format_decimal(&t, 20)))
}

/// A point of the branch realizing slope `r`.
pub fn solve_slope(
    branch: &Branch,
    sys: &RileySystem,
    r: &Rational,
    cfg: &TraceConfig,
) -> Result<CurvePoint, TraceError> {
    let (inf, sup, _) = slope_span(branch).ok_or_else(|| TraceError::OutOfRange {
        requested: crate::numeric::format_rational(r),
        inf: "none".into(),
        sup: "none".into(),
    })?;
    let bits = cfg.precision.bits();
    let rf = Float::with_val(bits + 64, r);
    let out_of_range = || TraceError::OutOfRange {
        requested: crate::numeric::format_rational(r),
        inf: format_decimal(&inf, 20),
        sup: format_decimal(&sup, 20),
    };
    if rf < inf || rf > sup {
        return Err(out_of_range());
    }
    let param = branch.parameterization;
    let slope_tol = cfg.tol_residual;
    // An existing point already carries the slope.
    for p in &branch.points {
        if let Some(s) = &p.slope {
            if Float::with_val(bits, s - &rf).abs() * Float::with_val(bits, p.t.ln_ref()).abs() <= slope_tol * 1e-3 {
                return Ok(p.clone());
            }
        }
    }
    let pts = &branch.points;
    let bracket = pts.windows(2).find(|w| match (&w[0].slope, &w[1].slope) {
        (Some(a), Some(b)) => (*a <= rf && rf <= *b) || (*b <= rf && rf <= *a),
        _ => false,
    });
    let Some(w) = bracket else {
        return Err(out_of_range());
    };
    let (mut lo, mut hi) = (w[0].clone(), w[1].clone());
    let lo_below = *lo.slope.as_ref().expect("slope") < rf;
    for _ in 0..60 {
        let xl = lo.param(param);
        let xh = hi.param(param);
        let width = Float::with_val(bits, xh - xl).abs();
        let scale = Float::with_val(bits, xl.abs_ref()).max(&Float::with_val(bits, 1));
        if width <= scale * 1e-12 {
            break;
        }
        let xm = Float::with_val(bits, xl + xh) / 2u32;
        let ym = Float::with_val(bits, dependent(&lo, param) + dependent(&hi, param)) / 2u32;
        let mid = point_at(sys, param, &xm, &ym, cfg)?;
        let Some(s) = &mid.slope else {
            return Err(TraceError::CorrectorDiverged(format_decimal(&xm, 20)));
        };
        if (*s < rf) == lo_below {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (t, u) = polish_slope_point(sys, &lo.t, &lo.u, r, bits, cfg.tol_residual, cfg.max_extra_bits)?;
    let bits = t.prec();
    let point = make_point(sys, t, u, bits)?;
    let res = slope_residual(
        sys,
        &point.t,
        &point.u,
        &Float::with_val(bits, r),
        precision_for_bits(bits),
    )?;
    if point.residual > cfg.tol_residual || res.abs() > cfg.tol_residual {
        return Err(TraceError::CorrectorDiverged(format_decimal(&point.t, 20)));
    }
    Ok(point)
}

/// Exact `|P|` at a point, rounded to `bits`.
pub fn exact_residual(sys: &RileySystem, t: &Float, u: &Float, bits: u32) -> Result<Float, TraceError> {
    Ok(Float::with_val(bits, eval_float_exact(&sys.p, t, u)?).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knotspec::validate_knot;
    use crate::riley::riley_system;

    fn t_min() -> Float {
        // (sqrt((sqrt5 - 1)/2) + sqrt((sqrt5 + 7)/2)) / 2
        let b = 400;
        let s5 = Float::with_val(b, 5).sqrt();
        let a = (Float::with_val(b, &s5 - 1u32) / 2u32).sqrt();
        let c = (Float::with_val(b, &s5 + 7u32) / 2u32).sqrt();
        (a + c) / 2u32
    }

    #[test]
    fn psi_seed_matches_closed_form() {
        let sys = riley_system(&validate_knot(11, 3).unwrap());
        let seed = seed_psi(&sys, Precision::default()).unwrap();
        assert!(Float::with_val(400, &seed.t - &t_min()).abs() < 1e-48);
        assert!(seed.u.is_zero());
        assert!(seed.residual <= 1e-30);
        assert!(seed.slope.as_ref().unwrap().clone().abs() < 1e-40);
    }

    #[test]
    fn trefoil_has_no_seed() {
        let sys = riley_system(&validate_knot(3, 1).unwrap());
        assert!(matches!(
            seed_psi(&sys, Precision::default()),
            Err(TraceError::NoRealSeed(_))
        ));
    }

    #[test]
    fn zero_length_trace_is_the_seed() {
        let sys = riley_system(&validate_knot(11, 3).unwrap());
        let seed = seed_psi(&sys, Precision::default()).unwrap();
        let cfg = TraceConfig {
            max_steps: 0,
            ..TraceConfig::default()
        };
        let b = trace_branch(&sys, &seed, Parameterization::ByT, Direction::Increasing, &cfg).unwrap();
        assert_eq!(b.points.len(), 1);
        assert_eq!(b.stop, StopReason::MaxSteps);
        let (lo, hi, mono) = slope_span(&b).unwrap();
        assert_eq!(lo, hi);
        assert!(mono);
    }

    #[test]
    fn figure_eight_seed_is_a_fold_in_t() {
        let sys = riley_system(&validate_knot(5, 3).unwrap());
        let seed = seed_psi(&sys, Precision::default()).unwrap();
        let cfg = TraceConfig::default();
        let err = trace_branch(&sys, &seed, Parameterization::ByT, Direction::Increasing, &cfg).unwrap_err();
        assert!(matches!(err, TraceError::GuardDegenerate { .. }));
    }

    #[test]
    fn bands() {
        let f = |x: f64| Float::with_val(100, x);
        assert!(Band::InverseQuarticStrip.contains(&f(2.0), &f(-0.05)));
        assert!(Band::InverseQuarticStrip.contains(&f(2.0), &f(0.0)));
        assert!(!Band::InverseQuarticStrip.contains(&f(2.0), &f(-0.0625)));
        assert!(!Band::InverseQuarticStrip.contains(&f(2.0), &f(0.01)));
        // u = 1: bounds (1 + √5)/2 ≈ 1.618 and (√2 + √6)/2 ≈ 1.932
        assert!(Band::SqrtShell.contains(&f(1.7), &f(1.0)));
        assert!(!Band::SqrtShell.contains(&f(1.6), &f(1.0)));
        assert!(!Band::SqrtShell.contains(&f(1.95), &f(1.0)));
    }

    #[test]
    fn shifted_square_seed_for_six_two() {
        let sys = riley_system(&validate_knot(11, 3).unwrap());
        let cfg = TraceConfig::default();
        let seeds = seeds_on_section(&sys, &SeedSection::ShiftedSquare, &cfg).unwrap();
        assert_eq!(seeds.len(), 1);
        // t^2 = (53 + √1513)/36
        let t2 = (Float::with_val(200, 1513).sqrt() + 53u32) / 36u32;
        assert!((Float::with_val(200, seeds[0].t.square_ref()) - t2).abs() < 1e-40);
        assert!(seeds[0].residual <= 1e-30);
    }
}
