//! Property tests for the exact layers and the certificate bookkeeping.

use proptest::prelude::*;
use rug::{Float, Rational};

use riley_core::certify::{classify_khoi, transfer_interval, KhoiClass, KhoiPoint};
use riley_core::knotspec::{cf_to_pq, pq_to_cf, sign_data};
use riley_core::laurent::eval_exact;
use riley_core::{riley_system, validate_knot, BivarPoly, TwoBridgeKnot, WangFamilySpec};

fn knot() -> impl Strategy<Value = TwoBridgeKnot> {
    (1i64..=6, -12i64..=12).prop_filter_map("not a knot", |(h, q)| validate_knot(2 * h + 1, q).ok())
}

fn rational() -> impl Strategy<Value = Rational> {
    (-40i64..=40, 1i64..=9).prop_map(|(n, d)| Rational::from((n, d)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn signs_are_palindromic(k in knot()) {
        let s = sign_data(&k);
        let n = s.signs.len();
        for i in 0..n {
            prop_assert_eq!(s.signs[i], s.signs[n - 1 - i]);
        }
        prop_assert_eq!(s.sigma, s.signs.iter().map(|&e| e as i64).sum::<i64>());
    }

    #[test]
    fn riley_polynomial_is_symmetric_in_t(k in knot(), t in rational(), u in rational()) {
        prop_assume!(t != 0);
        let sys = riley_system(&k);
        let lhs = eval_exact(&sys.p, &t, &u).unwrap();
        let rhs = eval_exact(&sys.p, &Rational::from(t.recip_ref()), &u).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn riley_polynomial_is_one_on_the_square(k in knot(), t in rational()) {
        prop_assume!(t != 0);
        let sys = riley_system(&k);
        let tm = &t - Rational::from(t.recip_ref());
        let y = Rational::from(tm.square_ref());
        prop_assert_eq!(eval_exact(&sys.p, &t, &y).unwrap(), 1);
    }

    #[test]
    fn canonical_text_round_trips(k in knot()) {
        let p = &riley_system(&k).p;
        prop_assert_eq!(&BivarPoly::from_canonical(&p.to_canonical()).unwrap(), p);
    }

    #[test]
    fn continued_fraction_round_trips(k in knot()) {
        let back = cf_to_pq(&pq_to_cf(&k)).unwrap();
        prop_assert!(back.is_equivalent(&k), "{} -> {}", k, back);
    }

    #[test]
    fn khoi_partition_on_the_circle(theta in 0.01f64..3.13, u in -6.0f64..3.0) {
        let bits = 200;
        let th = Float::with_val(bits, theta);
        let uu = Float::with_val(bits, u);
        let bound = -4.0 * theta.sin().powi(2);
        let outcome = classify_khoi(&KhoiPoint::UnitCircle { theta: th, u: uu });
        if u > 0.0 || u < bound - 1e-12 {
            prop_assert_eq!(outcome.unwrap(), KhoiClass::UnitCircleElliptic);
        } else if u <= 0.0 && u > bound + 1e-12 {
            prop_assert!(outcome.is_err());
        }
    }

    #[test]
    fn khoi_circle_boundary_is_rejected(theta in 0.01f64..3.13) {
        let bits = 200;
        let th = Float::with_val(bits, theta);
        let bound = -(Float::with_val(bits, th.sin_ref()).square() * 4u32);
        let point = KhoiPoint::UnitCircle { theta: th, u: bound };
        prop_assert!(classify_khoi(&point).is_err());
    }

    #[test]
    fn transfers_contain_minus_four_to_four(
        n in 1usize..=3,
        seed in proptest::collection::vec((-4i64..=4, any::<bool>()), 7),
        last in any::<bool>(),
    ) {
        let c: Vec<i64> = seed.iter().take(2 * n).map(|x| x.0).collect();
        let mut eps: Vec<i8> = seed.iter().take(2 * n).map(|x| if x.1 { 1 } else { -1 }).collect();
        eps.push(if last { 1 } else { -1 });
        let family = WangFamilySpec::six_two(c, eps).unwrap();
        let cert = transfer_interval(&family, &(Rational::from(-4), Rational::from(8))).unwrap();
        prop_assert!(cert.d % 2 != 0);
        prop_assert!(cert.transferred_interval.0 <= -4 && cert.transferred_interval.1 >= 4);
        if let Some(k) = cert.knot {
            prop_assert!(!k.is_torus());
        }
    }
}
