//! Acceptance criteria 1-9. Each test writes one `criterion N: PASS|FAIL`
//! line to stderr (uncaptured) before asserting.

use std::io::Write;
use std::sync::{Arc, OnceLock};
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rug::{Float, Rational};

use riley_core::certify::{
    classify_khoi, commutator_residual, interval_report, rational_peripheral_check, revalidate, transfer_interval,
    CertifyPolicy, IntervalReport, KhoiPoint,
};
use riley_core::continuation::{
    seed_psi, slope_span, solve_slope, trace_branch, Band, Branch, Direction, Parameterization, TraceConfig,
};
use riley_core::error::{CertifyError, RileyError, TraceError};
use riley_core::identities::identity_suite;
use riley_core::laurent::entries;
use riley_core::numeric::parse_decimal;
use riley_core::riley::{slope_of_point, slope_residual};
use riley_core::{riley_system, validate_knot, BivarPoly, Precision, RileySystem, TwoBridgeKnot, WangFamilySpec};

fn verdict(n: u32, name: &str, ok: bool, detail: &str) {
    let status = if ok { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr().lock(), "criterion {n}: {status} {name} ({detail})");
    assert!(ok, "criterion {n} ({name}) failed: {detail}");
}

fn q(n: i64, d: i64) -> Rational {
    Rational::from((n, d))
}

fn y() -> BivarPoly {
    let tm = BivarPoly::t_minus_inverse();
    &tm * &tm
}

/// `Σ c_ij y^i u^j` from `(coefficient, y power, u power)` triples.
fn in_y_u(terms: &[(i64, u32, u32)], y: &BivarPoly, u: &BivarPoly) -> BivarPoly {
    let pow = |base: &BivarPoly, k: u32| (0..k).fold(BivarPoly::one(), |acc, _| &acc * base);
    terms.iter().fold(BivarPoly::zero(), |acc, &(c, i, j)| {
        &acc + &(&(&pow(y, i) * &pow(u, j)) * &BivarPoly::constant(c))
    })
}

#[test]
fn criterion_1_exact_identity_suite() {
    let start = Instant::now();
    let reports = identity_suite(13);
    let elapsed = start.elapsed();
    let failed: Vec<String> = reports
        .iter()
        .filter(|r| !r.passed())
        .map(|r| format!("K({}, {})", r.p, r.q))
        .collect();
    let ok = failed.is_empty() && !reports.is_empty() && elapsed < Duration::from_secs(10);
    verdict(
        1,
        "exact identities for p <= 13",
        ok,
        &format!("{} knots, failures {:?}, {:.2?}", reports.len(), failed, elapsed),
    );
}

/// Word product by halving, with signs from an exact rational floor.
fn split_product(factors: &[[[BivarPoly; 2]; 2]]) -> [[BivarPoly; 2]; 2] {
    let mul = |a: &[[BivarPoly; 2]; 2], b: &[[BivarPoly; 2]; 2]| {
        let e = |i: usize, j: usize| &(&a[i][0] * &b[0][j]) + &(&a[i][1] * &b[1][j]);
        [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]]
    };
    match factors.len() {
        0 => [
            [BivarPoly::one(), BivarPoly::zero()],
            [BivarPoly::zero(), BivarPoly::one()],
        ],
        1 => factors[0].clone(),
        n => mul(&split_product(&factors[..n / 2]), &split_product(&factors[n / 2..])),
    }
}

fn brute_force_p(knot: &TwoBridgeKnot) -> BivarPoly {
    let t = BivarPoly::t_pow(1);
    let ti = BivarPoly::t_pow(-1);
    let u = BivarPoly::u();
    let zero = BivarPoly::zero();
    let one = BivarPoly::one();
    let x = [[t.clone(), one.clone()], [zero.clone(), ti.clone()]];
    let x_inv = [[ti.clone(), -&one], [zero.clone(), t.clone()]];
    let y = [[t.clone(), zero.clone()], [-&u, ti.clone()]];
    let y_inv = [[ti.clone(), zero.clone()], [u.clone(), t.clone()]];
    let (p, qq) = (knot.p(), knot.q());
    let factors: Vec<_> = (1..p)
        .map(|i| {
            let floor = Rational::from((i * qq, p)).floor();
            let positive = floor.numer().is_even();
            match (i % 2 == 1, positive) {
                (true, true) => x.clone(),
                (true, false) => x_inv.clone(),
                (false, true) => y.clone(),
                (false, false) => y_inv.clone(),
            }
        })
        .collect();
    let w = split_product(&factors);
    &w[0][0] - &(&BivarPoly::t_minus_inverse() * &w[0][1])
}

#[test]
fn criterion_2_oracle_equivalence() {
    let mut mismatched = Vec::new();
    let mut count = 0;
    for knot in TwoBridgeKnot::enumerate(13) {
        count += 1;
        let e = entries(&knot);
        let from_entries = &e.a - &(&BivarPoly::t_minus_inverse() * &e.b);
        if from_entries != brute_force_p(&knot) || riley_system(&knot).p != from_entries {
            mismatched.push(knot.to_string());
        }
    }
    verdict(
        2,
        "Riley polynomial equals split-product oracle",
        mismatched.is_empty(),
        &format!("{count} knots, mismatches {mismatched:?}"),
    );
}

fn t_min(bits: u32) -> Float {
    let s5 = Float::with_val(bits, 5).sqrt();
    let a = (Float::with_val(bits, &s5 - 1u32) / 2u32).sqrt();
    let c = (Float::with_val(bits, &s5 + 7u32) / 2u32).sqrt();
    (a + c) / 2u32
}

#[test]
fn criterion_3_six_two_regressions() {
    let knot = validate_knot(11, 3).unwrap();
    let sys = riley_system(&knot);
    let u = BivarPoly::u();
    let yy = y();
    let dpdu = in_y_u(
        &[
            (-1, 4, 0),
            (-5, 3, 0),
            (-8, 2, 0),
            (-2, 1, 0),
            (1, 0, 0),
            (8, 3, 1),
            (30, 2, 1),
            (32, 1, 1),
            (6, 0, 1),
            (-18, 2, 2),
            (-45, 1, 2),
            (-24, 0, 2),
            (16, 1, 3),
            (20, 0, 3),
            (-5, 0, 4),
        ],
        &yy,
        &u,
    );
    let dpdu_ok = sys.p.d_du() == dpdu;

    // x = (t - 1/t)^2 - u
    let x = &yy - &u;
    let one = BivarPoly::one();
    let cubic = in_y_u(&[(8, 3, 0), (30, 2, 0), (32, 1, 0), (8, 0, 0)], &x, &one);
    let quartic = in_y_u(&[(8, 4, 0), (46, 3, 0), (92, 2, 0), (68, 1, 0), (14, 0, 0)], &x, &one);
    let t3 = &BivarPoly::t_pow(3) - &BivarPoly::t_pow(-5);
    let t1 = &BivarPoly::t_pow(1) - &BivarPoly::t_pow(-3);
    let dpdt = &(&quartic * &t1) - &(&cubic * &t3);
    let dpdt_ok = sys.p.d_dt() == dpdt;

    let sigma_ok = sys.sigma() == 2;
    let seed = seed_psi(&sys, Precision::digits(60)).unwrap();
    let gap = Float::with_val(400, &seed.t - &t_min(400)).abs();
    let t_min_ok = gap < 1e-40;
    verdict(
        3,
        "K(11, 3) derivative displays, sigma, t_min",
        dpdu_ok && dpdt_ok && sigma_ok && t_min_ok,
        &format!(
            "dP/du {dpdu_ok}, dP/dt {dpdt_ok}, sigma {}, |t_min gap| {}",
            sys.sigma(),
            gap.to_f64()
        ),
    );
}

struct SixTwo {
    sys: Arc<RileySystem>,
    psi: Branch,
    phi: Branch,
    cfg: TraceConfig,
    trace_time: Duration,
}

fn six_two() -> &'static SixTwo {
    static CELL: OnceLock<SixTwo> = OnceLock::new();
    CELL.get_or_init(|| {
        let start = Instant::now();
        let sys = riley_system(&validate_knot(11, 3).unwrap());
        let cfg = TraceConfig::default();
        let seed = seed_psi(&sys, cfg.precision).unwrap();
        let psi_cfg = TraceConfig {
            band: Band::InverseQuarticStrip,
            ..cfg.clone()
        };
        let psi = trace_branch(&sys, &seed, Parameterization::ByT, Direction::Increasing, &psi_cfg).unwrap();
        let phi_cfg = TraceConfig {
            band: Band::SqrtShell,
            ..cfg.clone()
        };
        let phi = trace_branch(&sys, &seed, Parameterization::ByU, Direction::Increasing, &phi_cfg).unwrap();
        SixTwo {
            sys,
            psi,
            phi,
            cfg,
            trace_time: start.elapsed(),
        }
    })
}

fn six_two_report() -> &'static (IntervalReport, Duration) {
    static CELL: OnceLock<(IntervalReport, Duration)> = OnceLock::new();
    CELL.get_or_init(|| {
        let s = six_two();
        let start = Instant::now();
        let samples: Vec<Rational> = [
            (-39, 10),
            (-3, 1),
            (-2, 1),
            (-1, 1),
            (-1, 2),
            (1, 3),
            (1, 1),
            (5, 2),
            (7, 1),
            (79, 10),
        ]
        .iter()
        .map(|&(n, d)| q(n, d))
        .collect();
        let report = interval_report(
            &s.sys,
            &[s.psi.clone(), s.phi.clone()],
            &samples,
            &CertifyPolicy::default(),
            &s.cfg,
        )
        .unwrap();
        (report, start.elapsed() + s.trace_time)
    })
}

#[test]
fn criterion_4_six_two_interval() {
    let s = six_two();
    let (report, elapsed) = six_two_report();
    let psi_slopes: Vec<Rational> = [(-39, 10), (-3, 1), (-2, 1), (-1, 1), (-1, 2)]
        .iter()
        .map(|&(n, d)| q(n, d))
        .collect();
    let phi_slopes: Vec<Rational> = [(1, 3), (1, 1), (5, 2), (7, 1), (79, 10)]
        .iter()
        .map(|&(n, d)| q(n, d))
        .collect();
    let certified: Vec<&Rational> = report.certificates.iter().map(|c| &c.slope).collect();
    let all_present = psi_slopes.iter().chain(&phi_slopes).all(|r| certified.contains(&r));
    let all_revalidate = report.certificates.iter().all(|c| revalidate(c).is_ok());

    let p = s.cfg.precision;
    let seed = seed_psi(&s.sys, p).unwrap();
    let n_at_t_min = slope_of_point(&s.sys, &seed.t, &seed.u, p).unwrap().abs();
    let n_ok = n_at_t_min < 1e-25;

    let lo_ok = report.lo.open && report.lo.asymptotic && report.lo.limit == Some(q(-4, 1)) && report.lo.reached > -4;
    let hi_ok = report.hi.open && report.hi.asymptotic && report.hi.limit == Some(q(8, 1)) && report.hi.reached < 8;
    let fast = *elapsed < Duration::from_secs(120);
    verdict(
        4,
        "K(11, 3) interval (-4, 8)",
        all_present && all_revalidate && n_ok && lo_ok && hi_ok && fast,
        &format!(
            "{} certificates, revalidated {all_revalidate}, |n(t_min)| {:e}, interval ({}, {}) open/asymptotic {lo_ok}/{hi_ok}, {:.2?}",
            report.certificates.len(),
            n_at_t_min.to_f64(),
            report.lo.value,
            report.hi.value,
            elapsed
        ),
    );
}

fn inverse_quartic_ok(t: &Float, u: &Float) -> bool {
    let bits = t.prec() + 64;
    let t4 = Float::with_val(bits, t.square_ref()).square();
    let lower = -Float::with_val(bits, t4.recip_ref());
    lower < *u && u.cmp0() != Some(std::cmp::Ordering::Greater)
}

fn sqrt_shell_ok(t: &Float, u: &Float) -> bool {
    // (sqrt(u) + sqrt(u + 4))/2 < t < (sqrt(u + 1) + sqrt(u + 5))/2
    let bits = t.prec() + 64;
    let root = |shift: u32| Float::with_val(bits, u + shift).sqrt();
    let low = (root(0) + root(4)) / 2u32;
    let high = (root(1) + root(5)) / 2u32;
    u.cmp0() != Some(std::cmp::Ordering::Less) && low < *t && *t < high
}

#[test]
fn criterion_5_band_containment() {
    let s = six_two();
    let psi_in = s.psi.points.iter().all(|p| inverse_quartic_ok(&p.t, &p.u));
    let phi_in = s.phi.points.iter().all(|p| sqrt_shell_ok(&p.t, &p.u));
    let one_sign = |values: Vec<&Float>| {
        let first = values[0].cmp0();
        first.is_some_and(|f| f != std::cmp::Ordering::Equal) && values.iter().all(|v| v.cmp0() == first)
    };
    let psi_guard = one_sign(s.psi.points.iter().map(|p| &p.dpdu).collect());
    let phi_guard = one_sign(s.phi.points.iter().map(|p| &p.dpdt).collect());
    let ok = psi_in && phi_in && psi_guard && phi_guard && s.psi.is_certified() && s.phi.is_certified();
    verdict(
        5,
        "band containment and guard sign",
        ok,
        &format!(
            "psi {} points in band {psi_in} guard {psi_guard}; phi {} points in band {phi_in} guard {phi_guard}",
            s.psi.points.len(),
            s.phi.points.len()
        ),
    );
}

#[test]
fn criterion_6_figure_eight() {
    let sys = riley_system(&validate_knot(5, 3).unwrap());
    let cfg = TraceConfig::default();
    let seed = seed_psi(&sys, cfg.precision).unwrap();
    let up = trace_branch(&sys, &seed, Parameterization::ByU, Direction::Increasing, &cfg).unwrap();
    let down = trace_branch(&sys, &seed, Parameterization::ByU, Direction::Decreasing, &cfg).unwrap();
    let samples: Vec<Rational> = [(1, 1), (-1, 1), (2, 1), (-2, 1), (7, 2), (-7, 2)]
        .iter()
        .map(|&(n, d)| q(n, d))
        .collect();
    let report = interval_report(&sys, &[up, down], &samples, &CertifyPolicy::default(), &cfg);
    let (ok, detail) = match report {
        Ok(r) => {
            let ok = r.certificates.len() == 6
                && r.certificates.iter().all(|c| revalidate(c).is_ok())
                && r.lo.limit == Some(q(-4, 1))
                && r.hi.limit == Some(q(4, 1))
                && r.lo.open
                && r.hi.open;
            (
                ok,
                format!(
                    "{} certificates, interval ({}, {})",
                    r.certificates.len(),
                    r.lo.value,
                    r.hi.value
                ),
            )
        }
        Err(e) => (false, e.to_string()),
    };
    verdict(6, "K(5, 3) slopes and interval (-4, 4)", ok, &detail);
}

#[test]
fn criterion_7_rational_peripheral_identity() {
    let p = Precision::default();
    let mut rng = StdRng::seed_from_u64(0x5eed_0007);
    let mut worst = Float::new(64);
    for _ in 0..20 {
        let t = Float::with_val(p.bits(), rng.gen_range(1.1..5.0));
        let beta: u64 = rng.gen_range(1..=7);
        let alpha = loop {
            let a: i64 = rng.gen_range(-9..=9);
            if rug::Integer::from(a).gcd(&rug::Integer::from(beta)) == 1 {
                break a;
            }
        };
        let r = rational_peripheral_check(&t, alpha, beta, p);
        if r > worst {
            worst = Float::with_val(64, &r);
        }
    }
    let peripheral_ok = worst <= 1e-40;

    let s = six_two();
    let (report, _) = six_two_report();
    let mut worst_comm = Float::new(64);
    for cert in &report.certificates {
        let bits = Precision::digits(cert.revalidation_digits).bits();
        let t = parse_decimal(&cert.t, bits).unwrap();
        let u = parse_decimal(&cert.u, bits).unwrap();
        for (a, b) in [(1, 1), (3, 2), (-5, 3), (7, 4)] {
            let r = commutator_residual(&s.sys, &t, &u, a, b, p).unwrap();
            if r > worst_comm {
                worst_comm = Float::with_val(64, &r);
            }
        }
    }
    let comm_ok = worst_comm <= 1e-25 && !report.certificates.is_empty();
    verdict(
        7,
        "rational meridian roots and commutation with the longitude",
        peripheral_ok && comm_ok,
        &format!(
            "max |C^b - C^a| {:e}, max commutator {:e}",
            worst.to_f64(),
            worst_comm.to_f64()
        ),
    );
}

#[test]
fn criterion_8_transfer_suite() {
    let mut rng = StdRng::seed_from_u64(0x5eed_0008);
    let source = (q(-4, 1), q(8, 1));
    let mut bad = Vec::new();
    for _ in 0..50 {
        let n = rng.gen_range(1..=3);
        let c: Vec<i64> = (0..2 * n).map(|_| rng.gen_range(-3..=3)).collect();
        let eps: Vec<i8> = (0..2 * n + 1).map(|_| if rng.gen_bool(0.5) { 1 } else { -1 }).collect();
        let family = WangFamilySpec::six_two(c.clone(), eps.clone()).unwrap();
        let cert = transfer_interval(&family, &source).unwrap();
        let d = cert.d;
        let expected = if d > 0 {
            (q(-4 * d, 1), q(8 * d, 1))
        } else {
            (q(8 * d, 1), q(-4 * d, 1))
        };
        let (lo, hi) = &cert.transferred_interval;
        let ok = d % 2 != 0 && cert.transferred_interval == expected && *lo <= -4 && *hi >= 4;
        if !ok {
            bad.push(format!("c {c:?} eps {eps:?} d {d}"));
        }
    }
    verdict(
        8,
        "Wang transfer of (-4, 8)",
        bad.is_empty(),
        &format!("50 families, failures {bad:?}"),
    );
}

#[test]
fn criterion_9_negative_controls() {
    let s = six_two();
    let cfg = &s.cfg;
    let out_of_range =
        |b: &Branch, r: Rational| matches!(solve_slope(b, &s.sys, &r, cfg), Err(TraceError::OutOfRange { .. }));
    let endpoints_refused = [q(-4, 1), q(8, 1)]
        .into_iter()
        .all(|r| out_of_range(&s.psi, r.clone()) && out_of_range(&s.phi, r));

    let p = Precision::default();
    let bits = p.bits();
    let one = Float::with_val(bits, 1);
    let u = Float::with_val(bits, 0.3);
    let t_one_refused = matches!(slope_of_point(&s.sys, &one, &u, p), Err(RileyError::InvalidT(_)))
        && matches!(
            classify_khoi(&KhoiPoint::Real {
                t: one.clone(),
                u: u.clone()
            }),
            Err(CertifyError::Inadmissible(_))
        );

    // on u = (t - 1/t)^2 the polynomial is identically 1 and the slope
    // equation has no solution
    let t = Float::with_val(bits, 2);
    let on_square = Float::with_val(bits, 9) / 4u32;
    let residual = riley_core::laurent::eval_float_exact(&s.sys.p, &t, &on_square).unwrap();
    let square_refused = residual == 1
        && matches!(
            slope_residual(&s.sys, &t, &on_square, &Float::with_val(bits, 1), p),
            Err(RileyError::NonPositiveArgument(_))
        );

    let trefoil = riley_system(&validate_knot(3, 1).unwrap());
    let torus_refused = matches!(
        interval_report(&trefoil, &[], &[q(1, 1)], &CertifyPolicy::default(), cfg),
        Err(CertifyError::TorusKnot { .. })
    );
    let span = slope_span(&s.psi).unwrap();
    verdict(
        9,
        "negative controls",
        endpoints_refused && t_one_refused && square_refused && torus_refused,
        &format!(
            "slopes -4/8 refused {endpoints_refused} (psi span inf {:.9}), t = 1 refused {t_one_refused}, square locus refused {square_refused}, torus refused {torus_refused}",
            span.0.to_f64()
        ),
    );
}
