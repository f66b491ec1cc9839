use std::cmp::Ordering;
use std::sync::OnceLock;

use proptest::prelude::*;
use semitoric::actions::{rectangle_loop, MonodromyMatrix};
use semitoric::cartography::{cartographic_map_in, CutSpec};
use semitoric::inverse::*;
use semitoric::quantum::JointSpectrum;
use semitoric::singularities::BaseBox;
use semitoric::{IntegrableModel, MomentValue};

fn pendulum_window() -> BaseBox {
    BaseBox { a_lo: -2.0, a_hi: 2.0, b_lo: -1.2, b_hi: 3.0 }
}

fn jc_window() -> BaseBox {
    BaseBox { a_lo: -1.5, a_hi: 3.0, b_lo: -2.0, b_hi: 2.0 }
}

fn pendulum(h: f64) -> &'static JointSpectrum {
    static S: [OnceLock<JointSpectrum>; 2] = [OnceLock::new(), OnceLock::new()];
    let slot = if h > 0.075 { &S[0] } else { &S[1] };
    slot.get_or_init(|| {
        model_spectrum(&IntegrableModel::spherical_pendulum(), h, &pendulum_window()).unwrap()
    })
}

fn jc(h: f64) -> &'static JointSpectrum {
    static S: [OnceLock<JointSpectrum>; 2] = [OnceLock::new(), OnceLock::new()];
    let slot = if h > 0.075 { &S[0] } else { &S[1] };
    slot.get_or_init(|| model_spectrum(&IntegrableModel::spin_oscillator(), h, &jc_window()).unwrap())
}

fn mul(a: &MonodromyMatrix, b: &MonodromyMatrix) -> [[i64; 2]; 2] {
    let (x, y) = (&a.entries, &b.entries);
    let mut out = [[0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = x[i][0] * y[0][j] + x[i][1] * y[1][j];
        }
    }
    out
}

fn square(side: f64, center: [f64; 2]) -> Vec<[f64; 2]> {
    let s = side / 2.0;
    vec![
        [center[0] - s, center[1] - s],
        [center[0] + s, center[1] - s],
        [center[0] + s, center[1] + s],
        [center[0] - s, center[1] + s],
    ]
}

fn brute_hausdorff(a: &ConvexHull2D, b: &ConvexHull2D) -> f64 {
    // Dense sampling of each filled region against the other.
    let sample = |h: &ConvexHull2D| {
        let xs: Vec<f64> = h.vertices.iter().map(|v| v[0]).collect();
        let ys: Vec<f64> = h.vertices.iter().map(|v| v[1]).collect();
        let (x0, x1) = (xs.iter().cloned().fold(f64::INFINITY, f64::min), xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
        let (y0, y1) = (ys.iter().cloned().fold(f64::INFINITY, f64::min), ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
        let n = 200;
        let mut pts = Vec::new();
        for i in 0..=n {
            for j in 0..=n {
                let p = [x0 + (x1 - x0) * i as f64 / n as f64, y0 + (y1 - y0) * j as f64 / n as f64];
                if h.contains(p) {
                    pts.push(p);
                }
            }
        }
        pts
    };
    let directed = |x: &ConvexHull2D, y: &ConvexHull2D| {
        let ys = sample(y);
        sample(x)
            .iter()
            .map(|p| {
                ys.iter()
                    .map(|q| (p[0] - q[0]).hypot(p[1] - q[1]))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    directed(a, b).max(directed(b, a))
}

#[test]
fn hull_of_small_sets() {
    assert!(convex_hull(&[]).is_empty());
    assert_eq!(convex_hull(&[[1.0, 2.0], [1.0, 2.0]]).vertices, vec![[1.0, 2.0]]);
    let line = convex_hull(&[[0.0, 0.0], [2.0, 2.0], [1.0, 1.0], [3.0, 3.0]]);
    assert_eq!(line.vertices, vec![[0.0, 0.0], [3.0, 3.0]]);
    assert_eq!(line.area(), 0.0);

    let tri = convex_hull(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.2, 0.2], [0.5, 0.0]]);
    assert_eq!(tri.vertices.len(), 3);
    assert!((tri.area() - 0.5).abs() < 1e-15);
    assert!(tri.contains([0.5, 0.0]));
    assert!(!tri.contains([0.6, 0.6]));
    assert!((tri.distance([1.0, 1.0]) - 0.5f64.sqrt()).abs() < 1e-15);
}

#[test]
fn orientation_is_exact_near_degeneracy() {
    // Decimal collinear points that are not collinear in binary.
    let (a, b, c) = ([0.1, 0.1], [0.2, 0.2], [0.3, 0.3]);
    let o = orient(a, b, c);
    assert_eq!(orient(b, c, a), o);
    assert_eq!(orient(a, c, b), o.reverse());
    assert_eq!(orient([0.0, 0.0], [1.0, 1.0], [2.0, 2.0]), Ordering::Equal);
    // Adjacent floats: below the certified bound of the float determinant.
    assert_eq!(orient([0.0, 0.0], [1.0, 1.0], [2.0, 2f64.next_up()]), Ordering::Greater);
    assert_eq!(orient([0.0, 0.0], [1.0, 1.0], [2.0, 2f64.next_down()]), Ordering::Less);
    assert_eq!(orient([0.5, 0.5], [12.0, 12.0], [24.0, 24f64.next_up()]), Ordering::Greater);
}

#[test]
fn offset_squares() {
    let a = convex_hull(&square(1.0, [0.0, 0.0]));
    let b = convex_hull(&square(1.0, [0.1, 0.1]));
    let d = hausdorff_distance(&a, &b);
    assert!((d - 0.1 * 2f64.sqrt()).abs() < 1e-12, "{d}");
    assert_eq!(d, hausdorff_distance(&b, &a));
    assert_eq!(hausdorff_distance(&a, &a), 0.0);
    let brute = brute_hausdorff(&a, &b);
    assert!((brute - d).abs() < 1e-2, "{brute} vs {d}");

    let small = convex_hull(&square(0.5, [0.0, 0.0]));
    let d = hausdorff_distance(&a, &small);
    assert!((d - 0.25 * 2f64.sqrt()).abs() < 1e-12);
    assert!((brute_hausdorff(&a, &small) - d).abs() < 1e-2);
}

proptest! {
    #[test]
    fn hull_contains_its_points(pts in prop::collection::vec((-10.0..10.0f64, -10.0..10.0f64), 3..40)) {
        let pts: Vec<[f64; 2]> = pts.into_iter().map(|(x, y)| [x, y]).collect();
        let hull = convex_hull(&pts);
        for p in &pts {
            prop_assert!(hull.distance(*p) < 1e-12);
        }
        let v = &hull.vertices;
        if v.len() >= 3 {
            for i in 0..v.len() {
                prop_assert_eq!(orient(v[i], v[(i + 1) % v.len()], v[(i + 2) % v.len()]), Ordering::Greater);
            }
            prop_assert!(hull.area() > 0.0);
        }
        prop_assert_eq!(&convex_hull(v).vertices, v);
    }

    #[test]
    fn hausdorff_is_a_symmetric_translation_bound(
        pts in prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64), 3..20),
        dx in -1.0..1.0f64,
        dy in -1.0..1.0f64,
    ) {
        let a: Vec<[f64; 2]> = pts.iter().map(|&(x, y)| [x, y]).collect();
        let b: Vec<[f64; 2]> = a.iter().map(|p| [p[0] + dx, p[1] + dy]).collect();
        let (ha, hb) = (convex_hull(&a), convex_hull(&b));
        let d = hausdorff_distance(&ha, &hb);
        prop_assert_eq!(d, hausdorff_distance(&hb, &ha));
        prop_assert!(d <= dx.hypot(dy) + 1e-9);
    }
}

#[test]
fn classical_image_distances() {
    let model = IntegrableModel::spherical_pendulum();
    let image = classical_image(&model, &pendulum_window(), 201, 20_000).unwrap();
    assert_eq!(image.distance([0.0, 0.5]), 0.0);
    assert!((image.distance([0.0, -1.1]) - 0.1).abs() < 1e-3);
    assert!(image.hull.contains([0.0, 2.9]));
    assert!(!image.hull.contains([0.0, -1.05]));

    let model = IntegrableModel::spin_oscillator();
    let image = classical_image(&model, &jc_window(), 201, 20_000).unwrap();
    // J ≥ −1 on the spin-oscillator.
    assert!((image.distance([-1.3, 0.0]) - 0.3).abs() < 1e-6);
    assert_eq!(image.distance([1.0, 0.0]), 0.0);
}

#[test]
fn spectrum_lies_in_the_classical_image() {
    for (model, spec, window) in [
        (IntegrableModel::spherical_pendulum(), pendulum(0.1), pendulum_window()),
        (IntegrableModel::spin_oscillator(), jc(0.1), jc_window()),
    ] {
        let image = classical_image(&model, &window, 801, 0).unwrap();
        for p in spec.trusted() {
            assert!(image.distance([p.mu, p.lambda]) < 1e-9, "{} {p:?}", model.name());
        }
    }
}

#[test]
fn pendulum_monodromy() {
    let spec = pendulum(0.1);
    let h = spec.hbar;
    let around = rectangle_loop(MomentValue::new(0.0, 1.0), 5.0 * h, 5.0 * h);
    let m = quantum_monodromy(spec, &around).unwrap();
    assert!(m.is_elementary_unipotent(), "{m:?}");
    assert_eq!(m.det(), 1);

    let regular = rectangle_loop(MomentValue::new(1.0, 2.0), 5.0 * h, 5.0 * h);
    assert!(quantum_monodromy(spec, &regular).unwrap().is_identity());

    let mut reversed = vec![around[0]];
    reversed.extend(around[1..].iter().rev().copied());
    let r = quantum_monodromy(spec, &reversed).unwrap();
    assert_eq!(mul(&m, &r), [[1, 0], [0, 1]]);

    let mut twice = around.clone();
    twice.extend(around.iter().skip(1).copied());
    twice.push(around[0]);
    let m2 = quantum_monodromy(spec, &twice).unwrap();
    assert_eq!(m2.entries, mul(&m, &m));
}

#[test]
fn jc_monodromy() {
    let spec = jc(0.1);
    let h = spec.hbar;
    let m = quantum_monodromy(spec, &rectangle_loop(MomentValue::new(1.0, 0.0), 5.0 * h, 5.0 * h)).unwrap();
    assert!(m.is_elementary_unipotent(), "{m:?}");
    let regular = rectangle_loop(MomentValue::new(2.0, 0.3), 5.0 * h, 5.0 * h);
    assert!(quantum_monodromy(spec, &regular).unwrap().is_identity());
}

#[test]
fn lattice_cells_scale_with_hbar() {
    for h in [0.1, 0.05] {
        let cell = lattice_cell(pendulum(h), MomentValue::new(1.0, 2.0)).unwrap();
        let ratio = cell.det() / (h * h);
        assert!(ratio > 0.1 && ratio < 10.0, "{cell:?}");
    }
}

#[test]
fn detects_one_focus_focus_value() {
    let d = detect_focus_focus(pendulum(0.1)).unwrap();
    assert_eq!(d.estimates.len(), 1, "{d:?}");
    assert!(d.estimates[0].dist(&MomentValue::new(0.0, 1.0)) < 0.3);

    let d = detect_focus_focus(jc(0.1)).unwrap();
    assert_eq!(d.estimates.len(), 1, "{d:?}");
    assert!(d.estimates[0].dist(&MomentValue::new(1.0, 0.0)) < 0.3);
}

#[test]
fn toric_spectrum_has_no_focus_focus_value() {
    let model = IntegrableModel::toric_product(1.0, 1.5).unwrap();
    let window = BaseBox { a_lo: -2.0, a_hi: 2.0, b_lo: -2.0, b_hi: 2.0 };
    let spec = model_spectrum(&model, 0.1, &window).unwrap();
    assert!(spec.count() > 0);
    let report = invert(&spec).unwrap();
    assert_eq!(report.mff_estimate, 0, "{report:?}");
}

#[test]
fn volume_invariant_matches_classical_height() {
    let model = IntegrableModel::spherical_pendulum();
    let cut = CutSpec::uniform(&model, 1).unwrap();
    let f = cut.focus_values[0];
    let region = BaseBox { a_lo: f.a - 0.1, a_hi: f.a + 0.1, b_lo: f.b - 3.0, b_hi: f.b + 0.5 };
    let map = cartographic_map_in(&model, &cut, &region, 2, 0).unwrap();
    let marked = map.marked[0];
    let classical = marked.b - map.bottom_at(marked.a);

    let coarse = volume_invariant(pendulum(0.1), f).unwrap();
    let fine = volume_invariant(pendulum(0.05), f).unwrap();
    for (h, v) in [(0.1, &coarse), (0.05, &fine)] {
        assert!(v.value > 0.0);
        assert!(v.warnings.is_empty());
        assert!((v.value - classical).abs() <= 2.0 * h, "{} vs {classical}", v.value);
    }
    assert!((coarse.value - fine.value).abs() <= 0.1 * fine.value);
    assert!(volume_invariant(pendulum(0.1), MomentValue::new(0.03, 1.0)).unwrap().warnings.len() == 1);
    assert!(volume_invariant(pendulum(0.1), MomentValue::new(7.0, 1.0)).is_err());
}

#[test]
fn inversion_reads_back_from_csv() {
    let spec = jc(0.1);
    let direct = invert(spec).unwrap();
    let parsed = JointSpectrum::from_csv(&spec.to_csv()).unwrap();
    let reread = invert(&parsed).unwrap();
    assert_eq!(direct.mff_estimate, 1);
    assert_eq!(direct.mff_estimate, reread.mff_estimate);
    assert_eq!(direct.monodromy, reread.monodromy);
    assert_eq!(direct.volume_invariants, reread.volume_invariants);
    assert!((direct.volume_invariants[0] - 1.0).abs() <= 0.2);
}

#[test]
fn convergence_sweep() {
    let model = IntegrableModel::spin_oscillator();
    assert!(convergence_test(&model, &[0.2, 0.1], &jc_window()).is_err());
    let report = convergence_test(&model, &[0.2, 0.1, 0.05], &jc_window()).unwrap();
    let d: Vec<f64> = report.hausdorff_by_hbar.iter().map(|x| x.1).collect();
    assert!(d[0] > d[1] && d[1] > d[2], "{d:?}");
    assert_eq!(report.hbar, 0.05);
    assert_eq!(report.mff_estimate, 1);

    let empty = BaseBox { a_lo: 50.0, a_hi: 51.0, b_lo: 50.0, b_hi: 51.0 };
    let report = convergence_test(&IntegrableModel::toric_product(1.0, 1.5).unwrap(), &[0.2, 0.1, 0.05], &empty);
    if let Ok(r) = report {
        assert!(r.hull.is_empty());
        assert_eq!(r.mff_estimate, 0);
    }
}

#[test]
fn containment_shrinks_with_hbar() {
    let model = IntegrableModel::spherical_pendulum();
    let image = classical_image(&model, &pendulum_window(), 401, 50_000).unwrap();
    let coarse = containment(pendulum(0.1), &model, &image, 50_000);
    let fine = containment(pendulum(0.05), &model, &image, 50_000);
    assert_eq!(coarse.outside, 0.0);
    assert_eq!(fine.outside, 0.0);
    assert!(coarse.delta() > 1.3 * fine.delta(), "{coarse:?} {fine:?}");
    // Covering radius of a lattice with spacing ~ħ.
    assert!(fine.delta() > 0.5 * fine.hbar && fine.delta() < 5.0 * fine.hbar);
}
