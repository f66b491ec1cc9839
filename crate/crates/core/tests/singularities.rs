use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use semitoric::models::{IntegrableModel, Observable};
use semitoric::singularities::{
    Extremum, PhaseBox, Verdict, WilliamsonType, bifurcation_diagram, check_semitoric,
    classify_point, classify_with, default_base_box, default_phase_box, find_critical_points,
    level_extremum, linearization, spectrum,
};

const SIGNATURES: [(usize, usize, usize, usize); 6] = [
    (0, 2, 0, 0),
    (0, 1, 1, 0),
    (0, 0, 2, 0),
    (0, 0, 0, 1),
    (1, 1, 0, 0),
    (1, 0, 1, 0),
];

#[test]
fn local_models_classify_exactly() {
    for (k, ke, kh, kff) in SIGNATURES {
        let m = IntegrableModel::local_model(k, ke, kh, kff).unwrap();
        let origin = DVector::zeros(4);
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let cp = classify_with(&m, &origin, &mut rng).unwrap();
            assert_eq!(cp.wtype, WilliamsonType::new(k, ke, kh, kff), "seed {seed}");
            assert!(cp.nondegenerate);
            assert_eq!(cp.wtype.dof(), 2);
        }
    }
}

#[test]
fn named_local_examples() {
    let ff = IntegrableModel::local_model(0, 0, 0, 1).unwrap();
    let cp = classify_point(&ff, &ff.point(&[0.0; 4])).unwrap();
    assert_eq!(cp.wtype.label(), "focus-focus");
    let ee = IntegrableModel::local_model(0, 2, 0, 0).unwrap();
    assert_eq!(
        classify_point(&ee, &ee.point(&[0.0; 4]))
            .unwrap()
            .wtype
            .label(),
        "elliptic-elliptic"
    );
    let eh = IntegrableModel::local_model(0, 1, 1, 0).unwrap();
    assert_eq!(
        classify_point(&eh, &eh.point(&[0.0; 4])).unwrap().wtype,
        WilliamsonType::new(0, 1, 1, 0)
    );
}

#[test]
fn regular_point_is_rejected() {
    let m = IntegrableModel::local_model(2, 0, 0, 0).unwrap();
    assert!(classify_point(&m, &m.point(&[0.0; 4])).is_err());
}

#[test]
fn focus_local_model_has_only_the_origin() {
    let m = IntegrableModel::local_model(0, 0, 0, 1).unwrap();
    let region = PhaseBox {
        lo: vec![-1.0; 4],
        hi: vec![1.0; 4],
    };
    let pts = find_critical_points(&m, &region, 4, 1e-9).unwrap();
    assert_eq!(pts.len(), 1);
    assert!(pts[0].point.vector().norm() < 1e-6);
}

#[test]
fn pendulum_critical_points_are_the_poles() {
    let m = IntegrableModel::spherical_pendulum();
    let pts = find_critical_points(&m, &default_phase_box(&m), 3, 1e-9).unwrap();
    assert_eq!(pts.len(), 2);
    let expected = [[0.0, 0.0, -1.0], [0.0, 0.0, 1.0]];
    for (cp, e) in pts.iter().zip(expected) {
        let v = cp.point.vector();
        for i in 0..3 {
            assert!((v[i] - e[i]).abs() < 1e-8);
            assert!(v[3 + i].abs() < 1e-8);
        }
    }
    assert_eq!(pts[0].wtype.label(), "elliptic-elliptic");
    assert_eq!(pts[1].wtype.label(), "focus-focus");
}

#[test]
fn toric_product_has_four_fixed_points() {
    let m = IntegrableModel::toric_product(1.0, 1.5).unwrap();
    let pts = find_critical_points(&m, &default_phase_box(&m), 3, 1e-9).unwrap();
    assert_eq!(pts.len(), 4);
    assert!(pts.iter().all(|p| p.wtype.label() == "elliptic-elliptic"));
}

fn symmetric(eigs: &[(f64, f64)]) -> bool {
    let scale = eigs.iter().map(|(a, b)| a.hypot(*b)).fold(1.0, f64::max);
    eigs.iter().all(|(re, im)| {
        [(-re, *im), (*re, -im), (-re, -im)].iter().all(|(r, i)| {
            eigs.iter()
                .any(|(a, b)| (a - r).abs() < 1e-8 * scale && (b - i).abs() < 1e-8 * scale)
        })
    })
}

#[test]
fn spectra_have_hamiltonian_symmetry() {
    let models = [
        IntegrableModel::spherical_pendulum(),
        IntegrableModel::spin_oscillator(),
        IntegrableModel::coupled_angular_momenta(0.5, 1.0, 1.0).unwrap(),
        IntegrableModel::toric_product(1.0, 1.5).unwrap(),
    ];
    for m in &models {
        for cp in find_critical_points(m, &default_phase_box(m), 3, 1e-9).unwrap() {
            assert!(
                symmetric(&cp.eigenvalues),
                "{}: {:?}",
                m.name(),
                cp.eigenvalues
            );
            assert_eq!(cp.wtype.dof(), 2);
        }
    }
}

#[test]
fn type_is_invariant_under_shear_of_h() {
    // The linearization of c₁J + c₂(H + 0.3J) is the linearization of a
    // generic combination of J and H, so the pattern must not change.
    let m = IntegrableModel::spherical_pendulum();
    for pole in [1.0, -1.0] {
        let p = DVector::from_vec(vec![0.0, 0.0, pole, 0.0, 0.0, 0.0]);
        let base = classify_point(&m, &m.point_from(&p)).unwrap().wtype;
        for k in 0..20 {
            let th = 0.3 + k as f64 * 0.29;
            let (c1, c2) = (th.cos(), th.sin());
            let b = linearization(&m, Observable::Combination(c1 + 0.3 * c2, c2), &p);
            let eigs = spectrum(&b).unwrap();
            let mut real = 0;
            let mut imag = 0;
            let mut cplx = 0;
            let scale = eigs.iter().map(|z| z.norm()).fold(0.0, f64::max);
            for z in &eigs {
                if z.re.abs() < 1e-8 * scale {
                    imag += 1;
                } else if z.im.abs() < 1e-8 * scale {
                    real += 1;
                } else {
                    cplx += 1;
                }
            }
            let wt = WilliamsonType::new(0, imag / 2, real / 2, cplx / 4);
            assert_eq!(wt, base);
        }
    }
}

#[test]
fn pendulum_diagram() {
    let m = IntegrableModel::spherical_pendulum();
    let d = bifurcation_diagram(&m, &default_base_box(&m), &default_phase_box(&m), 40).unwrap();
    assert_eq!(d.m_ff, 1);
    assert!((d.focus_values[0].a).abs() < 1e-8 && (d.focus_values[0].b - 1.0).abs() < 1e-8);
    let ee = d.elliptic_elliptic_values();
    assert_eq!(ee.len(), 1);
    assert!(ee[0].a.abs() < 1e-8 && (ee[0].b + 1.0).abs() < 1e-8);
    assert_eq!(d.curves.len(), 1);
    let curve = &d.curves[0].samples;
    assert!(curve.len() > 100);
    assert!(curve.iter().all(|(_, t)| t.label() == "elliptic-regular"));
    // Opens upward: the minimum sits at a = 0.
    let low = curve.iter().min_by(|x, y| x.0.b.total_cmp(&y.0.b)).unwrap();
    assert!(low.0.a.abs() < 0.05);
    assert!(curve.iter().all(|(c, _)| c.b >= -1.0 - 1e-9));
}

#[test]
fn level_extremum_matches_analytic_pendulum_bottom() {
    // Min of H on J = 0 is the south pole with H = −1.
    let m = IntegrableModel::spherical_pendulum();
    let (h, _) = level_extremum(&m, 0.0, Extremum::Min, None).unwrap();
    assert!((h + 1.0).abs() < 1e-9);
    // Toric product: the extremes of H are ∓r₂ on every level.
    let t = IntegrableModel::toric_product(1.0, 1.5).unwrap();
    let (lo, _) = level_extremum(&t, 0.3, Extremum::Min, None).unwrap();
    let (hi, _) = level_extremum(&t, 0.3, Extremum::Max, None).unwrap();
    assert!((lo + 1.5).abs() < 1e-9 && (hi - 1.5).abs() < 1e-9);
}

#[test]
fn spin_and_toric_diagrams() {
    let s = IntegrableModel::spin_oscillator();
    let d = bifurcation_diagram(&s, &default_base_box(&s), &default_phase_box(&s), 40).unwrap();
    assert_eq!(d.m_ff, 1);
    let t = IntegrableModel::toric_product(1.0, 1.5).unwrap();
    let d = bifurcation_diagram(&t, &default_base_box(&t), &default_phase_box(&t), 40).unwrap();
    assert_eq!(d.m_ff, 0);
    let mut corners: Vec<(f64, f64)> = d
        .elliptic_elliptic_values()
        .iter()
        .map(|c| (c.a, c.b))
        .collect();
    corners.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let expected = [(-1.0, -1.5), (-1.0, 1.5), (1.0, -1.5), (1.0, 1.5)];
    assert_eq!(corners.len(), 4);
    for (c, e) in corners.iter().zip(expected) {
        assert!((c.0 - e.0).abs() < 1e-8 && (c.1 - e.1).abs() < 1e-8);
    }
}

#[test]
fn semitoric_reports() {
    let p = check_semitoric(&IntegrableModel::spherical_pendulum(), 20);
    assert_eq!(
        (
            p.s1_nondegenerate,
            p.s2_circle_action,
            p.s3_simple,
            p.j_proper
        ),
        (
            Verdict::Pass,
            Verdict::Pass,
            Verdict::Pass,
            Verdict::NotChecked
        )
    );
    for m in [
        IntegrableModel::spin_oscillator(),
        IntegrableModel::coupled_angular_momenta(0.5, 1.0, 2.0).unwrap(),
    ] {
        let r = check_semitoric(&m, 20);
        assert_eq!(r.s1_nondegenerate, Verdict::Pass, "{}", m.name());
        assert_eq!(r.s2_circle_action, Verdict::Pass);
        assert_eq!(r.s3_simple, Verdict::Pass);
    }
}
