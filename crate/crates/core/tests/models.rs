use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use semitoric::Error;
use semitoric::models::{
    self, Halton, IntegrableModel, ModelDescriptor, Observable, PhaseBound, System,
};

fn builtins() -> Vec<IntegrableModel> {
    vec![
        IntegrableModel::spherical_pendulum(),
        IntegrableModel::coupled_angular_momenta(0.5, 1.0, 2.0).unwrap(),
        IntegrableModel::coupled_angular_momenta(0.5, 1.0, 1.0).unwrap(),
        IntegrableModel::spin_oscillator(),
        IntegrableModel::toric_product(1.0, 1.5).unwrap(),
    ]
}

fn samples(model: &IntegrableModel, n: usize) -> Vec<DVector<f64>> {
    let mut h = Halton::new(model.sample_dim());
    let bound = PhaseBound { radius: 1.5 };
    (0..n)
        .map(|_| model.sample(&h.next_point(), &bound))
        .collect()
}

#[test]
fn eval_moment_examples() {
    let p = IntegrableModel::spherical_pendulum();
    let v = models::eval_moment(&p, &p.point(&[0.0, 0.0, 1.0, 0.0, 0.0, 0.0])).unwrap();
    assert_eq!((v.a, v.b), (0.0, 1.0));

    let s = IntegrableModel::spin_oscillator();
    let v = models::eval_moment(&s, &s.point(&[0.0, 0.0, -1.0, 0.0, 0.0])).unwrap();
    assert_eq!((v.a, v.b), (-1.0, 0.0));

    let c = IntegrableModel::coupled_angular_momenta(0.0, 1.0, 1.0).unwrap();
    let v = models::eval_moment(&c, &c.point(&[0.0, 0.0, 1.0, 0.0, 0.0, 1.0])).unwrap();
    assert_eq!((v.a, v.b), (2.0, 1.0));
}

#[test]
fn constraint_violation_names_invariant() {
    let p = IntegrableModel::spherical_pendulum();
    let err = models::eval_moment(&p, &p.point(&[0.0, 0.0, 1.0, 0.0, 0.0, 0.5])).unwrap_err();
    match err {
        Error::Domain { invariant, .. } => assert_eq!(invariant, "<x,y> = 0"),
        other => panic!("unexpected {other:?}"),
    }
    let err = models::eval_moment(&p, &p.point(&[0.0, 0.0, 1.1, 0.0, 0.0, 0.0])).unwrap_err();
    assert!(matches!(err, Error::Domain { ref invariant, .. } if invariant == "|x|^2 = 1"));
}

#[test]
fn canonical_momentum_generates_translation() {
    let q = IntegrableModel::local_model(1, 1, 0, 0).unwrap();
    let p = q.point(&[0.3, -0.2, 0.7, 1.1]);
    let x = models::hamiltonian_vector_field(&q, Observable::J, &p).unwrap();
    assert_eq!(x.components, vec![1.0, 0.0, 0.0, 0.0]);
    let xi1 = Observable::Coordinate(2);
    let x1 = Observable::Coordinate(0);
    assert_eq!(models::poisson_bracket(&q, xi1, x1, &p).unwrap(), 1.0);
    assert_eq!(models::poisson_bracket(&q, x1, xi1, &p).unwrap(), -1.0);
}

#[test]
fn pendulum_rest_point_is_fixed_by_j() {
    let m = IntegrableModel::spherical_pendulum();
    let p = m.point(&[0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
    let x = models::hamiltonian_vector_field(&m, Observable::J, &p).unwrap();
    assert!(x.components.iter().all(|c| *c == 0.0));
}

/// Symplectic form on the tangent space, assembled independently of the
/// Poisson structure used by the library.
fn omega(model: &IntegrableModel, p: &DVector<f64>, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
    let sphere = |start: usize| {
        let x = [p[start], p[start + 1], p[start + 2]];
        let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        let (a, b) = (
            [u[start], u[start + 1], u[start + 2]],
            [v[start], v[start + 1], v[start + 2]],
        );
        let c = [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ];
        (x[0] * c[0] + x[1] * c[1] + x[2] * c[2]) / r2
    };
    match model.system() {
        System::SphericalPendulum => (0..3).map(|i| u[3 + i] * v[i] - u[i] * v[3 + i]).sum(),
        System::CoupledAngularMomenta { .. } | System::ToricProduct { .. } => sphere(0) + sphere(3),
        System::SpinOscillator => sphere(0) + (u[4] * v[3] - u[3] * v[4]),
        System::LocalModel { .. } => unreachable!(),
    }
}

fn oracle_field(model: &IntegrableModel, which: Observable, p: &DVector<f64>) -> DVector<f64> {
    let q = model.tangent_basis(p);
    let n = q.ncols();
    let h = 1e-6;
    let df: Vec<f64> = (0..n)
        .map(|j| {
            let e = q.column(j).into_owned();
            (model.value(which, &(p + &e * h)) - model.value(which, &(p - &e * h))) / (2.0 * h)
        })
        .collect();
    // Solve Σ_i c_i ω(q_i, q_j) = −df(q_j).
    let w = DMatrix::from_fn(n, n, |i, j| {
        omega(
            model,
            p,
            &q.column(i).into_owned(),
            &q.column(j).into_owned(),
        )
    });
    let rhs = DVector::from_iterator(n, df.iter().map(|d| -d));
    let c = w
        .transpose()
        .lu()
        .solve(&rhs)
        .expect("symplectic form is nondegenerate");
    &q * c
}

#[test]
fn vector_field_matches_symplectic_pairing_oracle() {
    let m = IntegrableModel::spherical_pendulum();
    let p = DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
    let x = m.vector_field(Observable::H, &p);
    let o = oracle_field(&m, Observable::H, &p);
    assert!((&x - &o).norm() < 1e-6 * o.norm().max(1.0), "{x} vs {o}");

    for model in builtins() {
        for p in samples(&model, 20) {
            for which in [
                Observable::J,
                Observable::H,
                Observable::Combination(0.3, -1.2),
            ] {
                let x = model.vector_field(which, &p);
                let o = oracle_field(&model, which, &p);
                assert!(
                    (&x - &o).norm() <= 1e-6 * o.norm().max(1.0),
                    "{} {which:?}: {x} vs {o}",
                    model.name()
                );
            }
        }
    }
}

#[test]
fn moment_components_commute() {
    for model in builtins() {
        for p in samples(&model, 1000) {
            let b = model.bracket(Observable::J, Observable::H, &p);
            assert!(b.abs() < 1e-9, "{}: {{J,H}} = {b}", model.name());
            assert!(
                model.bracket(Observable::J, Observable::J, &p).abs() < 1e-15
            );
        }
    }
}

#[test]
fn vector_fields_are_tangent() {
    for model in builtins() {
        for p in samples(&model, 50) {
            let x = model.vector_field(Observable::H, &p);
            for n in model.normals(&p) {
                assert!(n.dot(&x).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn j_generates_a_2pi_periodic_action() {
    for model in builtins() {
        for p in samples(&model, 10) {
            let q = models::flow_raw(&model, Observable::J, &p, 2.0 * std::f64::consts::PI, 1e-10)
                .unwrap();
            assert!((&q - &p).norm() < 1e-6, "{}", model.name());
            let r = model.j_rotation(0.7, &p).unwrap();
            let f = models::flow_raw(&model, Observable::J, &p, 0.7, 1e-10).unwrap();
            assert!((&r - &f).norm() < 1e-8, "{}: rotation sense", model.name());
        }
    }
}

#[test]
fn zero_duration_is_identity() {
    let m = IntegrableModel::spherical_pendulum();
    let p = m.point(&[0.6, 0.0, 0.8, 0.0, 0.3, 0.0]);
    assert_eq!(models::flow(&m, Observable::H, &p, 0.0, 1e-9).unwrap(), p);
}

fn rk4(model: &IntegrableModel, p: &DVector<f64>, duration: f64, steps: usize) -> DVector<f64> {
    let h = duration / steps as f64;
    let f = |y: &DVector<f64>| model.vector_field(Observable::H, y);
    let mut y = p.clone();
    for _ in 0..steps {
        let k1 = f(&y);
        let k2 = f(&(&y + &k1 * (h / 2.0)));
        let k3 = f(&(&y + &k2 * (h / 2.0)));
        let k4 = f(&(&y + &k3 * h));
        y += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    y
}

#[test]
fn long_flow_conserves_energy_and_matches_fixed_step_oracle() {
    let m = IntegrableModel::spherical_pendulum();
    let mut p = DVector::from_vec(vec![0.6, 0.0, 0.8, 0.0, 0.7, 0.0]);
    m.project(&mut p);
    let (j0, h0) = m.moment(&p);
    let q = models::flow_raw(&m, Observable::H, &p, 100.0, 1e-9).unwrap();
    let (j1, h1) = m.moment(&q);
    assert!((h1 - h0).abs() < 1e-6 && (j1 - j0).abs() < 1e-6);
    let o = rk4(&m, &p, 100.0, 200_000);
    assert!((&q - &o).norm() < 1e-5, "{}", (&q - &o).norm());
}

#[test]
fn descriptor_round_trip_and_errors() {
    let d = ModelDescriptor::from_json(
        r#"{"model":"coupled_angular_momenta","params":{"t":0.5,"a":1,"b":2}}"#,
    )
    .unwrap();
    let m = d.build().unwrap();
    assert_eq!(ModelDescriptor::of(&m), d);
    assert!(
        ModelDescriptor::from_json(r#"{"model":"nope"}"#)
            .unwrap()
            .build()
            .is_err()
    );
    assert!(ModelDescriptor::from_json("{").is_err());
    let bad =
        ModelDescriptor::from_json(r#"{"model":"spherical_pendulum","params":{"t":1}}"#).unwrap();
    assert!(bad.build().is_err());
    let q = ModelDescriptor::from_json(r#"{"model":"local_model_Q","params":{"k_ff":1}}"#)
        .unwrap()
        .build()
        .unwrap();
    assert_eq!(q.dof(), 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn flow_is_reversible(u in prop::collection::vec(0.01f64..0.99, 4), s in -2.0f64..2.0, which in 0usize..3) {
        let tol = 1e-9;
        for model in builtins() {
            let p = model.sample(&u, &PhaseBound { radius: 1.5 });
            let obs = [Observable::J, Observable::H, Observable::Combination(0.4, 0.9)][which];
            let q = models::flow_raw(&model, obs, &p, s, tol).unwrap();
            let back = models::flow_raw(&model, obs, &q, -s, tol).unwrap();
            prop_assert!((&back - &p).norm() < 2.0 * tol * p.norm().max(1.0), "{} {}", model.name(), (&back - &p).norm());
            let (j0, h0) = model.moment(&p);
            let (j1, h1) = model.moment(&q);
            prop_assert!((j1 - j0).abs() < 10.0 * tol && (h1 - h0).abs() < 10.0 * tol);
        }
    }

    #[test]
    fn bracket_is_antisymmetric(u in prop::collection::vec(0.0f64..1.0, 4), i in 0usize..5, k in 0usize..5) {
        let model = IntegrableModel::spin_oscillator();
        let p = model.sample(&u, &PhaseBound::default());
        let (f, g) = (Observable::Coordinate(i), Observable::Coordinate(k));
        let a = model.bracket(f, g, &p);
        let b = model.bracket(g, f, &p);
        prop_assert!((a + b).abs() < 1e-12);
    }
}
