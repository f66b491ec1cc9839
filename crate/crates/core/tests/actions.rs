use std::f64::consts::{PI, TAU};

use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;
use semitoric::actions::poly::Poly;
use semitoric::actions::*;
use semitoric::models::{self, IntegrableModel, MomentValue, Observable};
use semitoric::singularities::BaseBox;
use semitoric::Error;

fn r(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Complete elliptic integral of the first kind via the arithmetic-geometric
/// mean.
fn ellip_k(k: f64) -> f64 {
    let (mut a, mut b) = (1.0, (1.0 - k * k).sqrt());
    for _ in 0..40 {
        let (x, y) = (0.5 * (a + b), (a * b).sqrt());
        a = x;
        b = y;
    }
    PI / (2.0 * a)
}

#[test]
fn first_period_is_the_circle() {
    let m = IntegrableModel::spherical_pendulum();
    let p = period_basis_at(&m, MomentValue::new(0.3, 0.5), 1e-10).unwrap();
    assert_eq!(p.first, (TAU, 0.0));
    assert!(p.tau2() > 0.0 && (0.0..TAU).contains(&p.tau1()));
}

#[test]
fn planar_pendulum_half_period() {
    // On J = 0 the motion is planar with energy b; the orbit-space curve
    // closes after half an oscillation, 2K(k) with k² = (1 + b)/2.
    let m = IntegrableModel::spherical_pendulum();
    for b in [-0.8, -0.3, 0.0, 0.4, 0.8] {
        let p = period_basis_at(&m, MomentValue::new(0.0, b), 1e-11).unwrap();
        let oracle = 2.0 * ellip_k(((1.0 + b) / 2.0).sqrt());
        assert!((p.tau2() - oracle).abs() < 1e-7, "b={b}: {} vs {oracle}", p.tau2());
        assert!((p.tau1() - PI).abs() < 1e-7);
    }
}

#[test]
fn toric_product_periods() {
    let m = IntegrableModel::toric_product(1.0, 1.5).unwrap();
    let p = period_basis_at(&m, MomentValue::new(0.2, 0.3), 1e-10).unwrap();
    assert!((p.tau2() - TAU).abs() < 1e-7);
    let t1 = p.tau1().min(TAU - p.tau1());
    assert!(t1 < 1e-6);
}

#[test]
fn periods_are_fiber_intrinsic() {
    let m = IntegrableModel::spin_oscillator();
    let c = MomentValue::new(0.6, 0.2);
    let seed = fiber_seed(&m, c).unwrap();
    let other = models::flow(&m, Observable::H, &seed, 1.3, 1e-11).unwrap();
    let other = m.point_from(&m.j_rotation(0.9, &other.vector()).unwrap());
    let x = period_basis(&m, c, &seed, 1e-10).unwrap();
    let y = period_basis(&m, c, &other, 1e-10).unwrap();
    let d1 = (x.tau1() - y.tau1()).rem_euclid(TAU);
    assert!(d1.min(TAU - d1) < 1e-6);
    assert!((x.tau2() - y.tau2()).abs() < 1e-6);
}

#[test]
fn seed_must_lie_on_the_fiber() {
    let m = IntegrableModel::spherical_pendulum();
    let seed = fiber_seed(&m, MomentValue::new(0.0, 0.0)).unwrap();
    assert!(matches!(
        period_basis(&m, MomentValue::new(0.0, 0.3), &seed, 1e-9),
        Err(Error::Parameter(_))
    ));
    let q = IntegrableModel::local_model(0, 0, 0, 1).unwrap();
    assert!(period_basis_at(&q, MomentValue::new(0.1, 0.1), 1e-9).is_err());
}

#[test]
fn return_time_grows_logarithmically() {
    let m = IntegrableModel::spherical_pendulum();
    let pts: Vec<(f64, f64)> = [1e-3, 3e-3, 1e-2, 3e-2, 1e-1]
        .iter()
        .map(|w| {
            let p = period_basis_at(&m, MomentValue::new(0.0, 1.0 - w), 1e-11).unwrap();
            ((1.0 / w).ln(), p.tau2() / TAU)
        })
        .collect();
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |s, p| (s.0 + p.0, s.1 + p.1));
    let (mx, my) = (sx / n, sy / n);
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!((slope * TAU - 1.0).abs() < 0.05, "slope {slope}");
}

#[test]
fn pendulum_monodromy() {
    let m = IntegrableModel::spherical_pendulum();
    let around = rectangle_loop(MomentValue::new(0.0, 1.0), 0.4, 0.4);
    let mm = classical_monodromy(&m, &around, 1e-9).unwrap();
    assert!(mm.is_elementary_unipotent(), "{mm:?}");
    assert_eq!((mm.det(), mm.trace()), (1, 2));
    assert!(mm.residual < 1e-3);

    let reversed: Vec<MomentValue> = around.iter().rev().copied().collect();
    let inv = classical_monodromy(&m, &reversed, 1e-9).unwrap();
    assert_eq!(inv.entries[1][0], -mm.entries[1][0]);

    let regular = rectangle_loop(MomentValue::new(0.0, 0.0), 0.3, 0.3);
    assert!(classical_monodromy(&m, &regular, 1e-9).unwrap().is_identity());
}

#[test]
fn action_chart_reproduces_periods() {
    let m = IntegrableModel::spherical_pendulum();
    let region = BaseBox {
        a_lo: 0.2,
        a_hi: 0.6,
        b_lo: 0.0,
        b_hi: 0.4,
    };
    let c0 = MomentValue::new(0.3, 0.1);
    let chart = action_integrals(&m, &region, c0, 5, 1e-10).unwrap();
    assert!(chart.max_defect < 1e-5);
    let probe = action_integrals(
        &m,
        &BaseBox {
            a_lo: 0.3,
            a_hi: 0.3 + 1e-3,
            b_lo: 0.1,
            b_hi: 0.1 + 1e-3,
        },
        c0,
        2,
        1e-10,
    )
    .unwrap();
    assert!(probe.g2[0][0].abs() < 1e-12 && probe.g1[0][0] == 0.0);
    // Finite differences of g₂ in b at interior nodes against τ₂/2π.
    let h = chart.b[1] - chart.b[0];
    for i in 0..5 {
        for j in 1..4 {
            let fd = (chart.g2[i][j + 1] - chart.g2[i][j - 1]) / (2.0 * h);
            let tau2 = chart.periods[i][j].1 / TAU;
            assert!((fd - tau2).abs() < 1e-3 * tau2, "{fd} vs {tau2}");
        }
    }
}

#[test]
fn chart_over_focus_value_is_rejected() {
    let m = IntegrableModel::spherical_pendulum();
    let region = BaseBox {
        a_lo: -0.3,
        a_hi: 0.3,
        b_lo: 0.7,
        b_hi: 1.3,
    };
    let err = action_integrals(&m, &region, MomentValue::new(-0.3, 0.7), 3, 1e-9).unwrap_err();
    assert!(matches!(err, Error::NonClosedForm { .. }), "{err:?}");
}

#[test]
fn flat_focus_model_has_no_higher_coefficients() {
    let mut h = Poly::zero(3);
    h.set(0, 1, 0.37);
    h.set(1, 0, 1.1);
    let flat = FlatFocusModel { h };
    let linear = FocusLinearPart { kappa: 1.0, mu: 0.0 };
    for eps in [1, -1] {
        let ra = regularized_action_from(&flat, MomentValue::new(0.0, 0.0), 0.1, eps, 3, linear)
            .unwrap();
        assert!((ra.coefficient(0, 1) - 0.37).abs() < 1e-8);
        let c10 = ra.coefficient(1, 0);
        assert!((c10 - 0.1).abs() < 1e-8, "{c10}");
        for c in &ra.taylor {
            if c.i + c.j >= 2 {
                assert!(c.value.abs() < 1e-8);
            }
        }
    }
}

#[test]
fn pendulum_regularized_action() {
    let m = IntegrableModel::spherical_pendulum();
    let c0 = MomentValue::new(0.0, 1.0);
    let up = regularized_action(&m, c0, 0.1, 1, 3).unwrap();
    let down = regularized_action(&m, c0, 0.1, -1, 3).unwrap();
    assert!((up.coefficient(0, 1) - down.coefficient(0, 1)).abs() < 1e-4);
    assert!(up.residual < 1e-3);

    // Continuity across the cut: the fit also explains periods inside the
    // excluded sector.
    let source = ModelPeriods {
        model: &m,
        tol: 1e-10,
    };
    for side in [-1.0, 1.0] {
        let c = MomentValue::new(side * 0.004, 1.05);
        assert!(up.check_at(&source, c).unwrap() < 1e-3);
    }

    // Regular part of the return time along a = 0 below the focus value:
    // τ₂ + ln δ → −2π·C₀,₁ as δ → 0.
    let data: Vec<(f64, f64)> = [1e-4, 3e-4, 1e-3, 3e-3, 1e-2]
        .iter()
        .map(|d| {
            let p = period_basis_at(&m, MomentValue::new(0.0, 1.0 - d), 1e-11).unwrap();
            (*d, p.tau2() + d.ln())
        })
        .collect();
    let rows: Vec<[f64; 3]> = data.iter().map(|(d, _)| [1.0, *d, d * d.ln()]).collect();
    let a = nalgebra::DMatrix::from_fn(rows.len(), 3, |i, j| rows[i][j]);
    let y = nalgebra::DVector::from_iterator(data.len(), data.iter().map(|p| p.1));
    let coef = a.svd(true, true).solve(&y, 1e-14).unwrap();
    let oracle = -coef[0] / TAU;
    assert!((up.coefficient(0, 1) - oracle).abs() < 1e-3, "{} vs {oracle}", up.coefficient(0, 1));

    let t = taylor_invariant(&up);
    assert_eq!(t.get(0, 0), BigRational::from_integer(0.into()));
    let c10 = t.get_f64(1, 0);
    assert!((0.0..1.0).contains(&c10));
    assert_eq!(t.normalized(), t);
}

#[test]
fn k4_examples() {
    let mut b = TaylorSeries::zero(3);
    b.set(0, 1, r(1, 1));
    assert_eq!(k4_act(&b, (0, 1)), b);

    let mut t = TaylorSeries::zero(3);
    t.set(1, 0, r(3, 10));
    assert_eq!(k4_act(&t, (1, 0)).get(1, 0), r(1, 5));

    let mut s = TaylorSeries::zero(3);
    s.set(1, 0, r(3, 5));
    s.set(0, 2, r(1, 7));
    let (canon, j) = k4_canonical(&s).unwrap();
    assert_eq!(canon.get(1, 0), r(1, 10));
    assert_eq!(k4_act(&s, j), canon);

    let mut z = TaylorSeries::zero(3);
    z.set(0, 2, r(-2, 3));
    let (canon, j) = k4_canonical(&z).unwrap();
    assert_eq!(j, (0, 1));
    assert_eq!(canon.get(0, 2), r(2, 3));

    let mut undecidable = TaylorSeries::zero(3);
    undecidable.set(2, 0, r(1, 2));
    assert!(matches!(
        k4_canonical(&undecidable),
        Err(Error::UndecidableAtDegree { degree: 3 })
    ));
}

#[test]
fn series_json_round_trip() {
    let mut s = TaylorSeries::zero(2);
    s.set(1, 0, r(7, 4));
    s.set(1, 1, r(-2, 9));
    let text = serde_json::to_string(&s.to_json()).unwrap();
    assert!(text.contains("\"3/4\"") && text.contains("\"-2/9\""));
    assert_eq!(TaylorSeries::from_json_str(&text).unwrap(), s);
    assert!(TaylorSeries::from_json_str(r#"{"degree":1,"coefficients":[{"i":2,"j":0,"value":"1"}]}"#).is_err());
    assert!(parse_rational("1/0").is_err());
    assert_eq!(parse_rational(" 6/4 ").unwrap(), r(3, 2));
    assert_eq!(parse_rational("0.25").unwrap(), r(1, 4));
}

fn arb_series() -> impl Strategy<Value = TaylorSeries> {
    prop::collection::vec((-5i64..=5, 1i64..=8), 9).prop_map(|v| {
        let mut s = TaylorSeries::zero(3);
        let idx = [(1, 0), (0, 1), (2, 0), (1, 1), (0, 2), (3, 0), (2, 1), (1, 2), (0, 3)];
        for ((i, j), (n, d)) in idx.iter().zip(v) {
            s.set(*i, *j, r(n, d));
        }
        s
    })
}

fn arb_k4() -> impl Strategy<Value = K4> {
    (0u8..2, 0u8..2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn k4_is_a_right_action(s in arb_series(), x in arb_k4(), y in arb_k4()) {
        prop_assert_eq!(k4_act(&k4_act(&s, x), y), k4_act(&s, k4_compose(x, y)));
        prop_assert_eq!(k4_act(&k4_act(&s, x), x), s.clone());
        prop_assert_eq!(k4_act(&s, (0, 0)), s);
    }

    #[test]
    fn canonical_form_is_orbit_constant(s in arb_series(), x in arb_k4()) {
        let moved = k4_act(&s, x);
        match (k4_canonical(&s), k4_canonical(&moved)) {
            (Ok((a, ja)), Ok((b, _))) => {
                prop_assert_eq!(&a, &b);
                prop_assert_eq!(k4_act(&s, ja), a);
            }
            (Err(_), Err(_)) => {}
            other => prop_assert!(false, "inconsistent: {:?}", other),
        }
    }

    #[test]
    fn b_coefficient_is_orbit_invariant(s in arb_series(), x in arb_k4()) {
        prop_assert_eq!(k4_act(&s, x).get(0, 1), s.get(0, 1));
    }
}
