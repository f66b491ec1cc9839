//! Small solvers shared by the classical modules.

use nalgebra::{DMatrix, DVector};

use crate::models::IntegrableModel;

/// Outcome of a constrained least-squares solve.
#[derive(Clone, Debug)]
pub struct Solved {
    pub point: DVector<f64>,
    pub residual: f64,
}

/// Levenberg–Marquardt on the constraint manifold of `model`.
///
/// Unknowns are a tangent displacement of the point (re-projected after every
/// step) and `extra.len()` free scalars. For underdetermined systems the
/// damped normal equations give the minimum-norm Gauss–Newton step.
pub fn manifold_lm<F>(
    model: &IntegrableModel,
    start: &DVector<f64>,
    extra: &DVector<f64>,
    residual: F,
    tol: f64,
    max_iter: usize,
) -> Option<Solved>
where
    F: Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64>,
{
    let mut p = start.clone();
    model.project(&mut p);
    let mut e = extra.clone();
    let mut r = residual(&p, &e);
    let mut norm = r.norm();
    if !norm.is_finite() {
        return None;
    }
    let mut lambda = 1e-6;
    let k = e.len();
    for _ in 0..max_iter {
        if norm < tol {
            break;
        }
        let q = model.tangent_basis(&p);
        let m = q.ncols();
        let h = 1e-7;
        let mut jac = DMatrix::zeros(r.len(), m + k);
        for j in 0..m {
            let dp = q.column(j) * h;
            let rp = residual(&(&p + &dp), &e);
            let rm = residual(&(&p - &dp), &e);
            jac.set_column(j, &((rp - rm) / (2.0 * h)));
        }
        for j in 0..k {
            let mut ep = e.clone();
            let mut em = e.clone();
            ep[j] += h;
            em[j] -= h;
            let d = (residual(&p, &ep) - residual(&p, &em)) / (2.0 * h);
            jac.set_column(m + j, &d);
        }
        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let g = &jt * &r;
        let mut improved = false;
        for _ in 0..12 {
            let mut a = jtj.clone();
            for i in 0..m + k {
                a[(i, i)] += lambda * (1.0 + jtj[(i, i)]);
            }
            let Some(step) = a.lu().solve(&(-&g)) else {
                lambda *= 10.0;
                continue;
            };
            let mut p_new = &p + &q * step.rows(0, m);
            model.project(&mut p_new);
            let e_new = &e + step.rows(m, k);
            let r_new = residual(&p_new, &e_new);
            let n_new = r_new.norm();
            if n_new.is_finite() && n_new < norm {
                p = p_new;
                e = e_new;
                r = r_new;
                norm = n_new;
                lambda = (lambda * 0.1).max(1e-15);
                improved = true;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    Some(Solved {
        point: p,
        residual: norm,
    })
}

/// Gauss–Legendre nodes and weights on [−1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Ordinary least squares via QR; returns the coefficients and the RMS
/// residual.
pub fn least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<(DVector<f64>, f64)> {
    // Column scaling keeps polynomial design matrices well conditioned.
    let scales: Vec<f64> = (0..a.ncols())
        .map(|j| a.column(j).norm().max(1e-300))
        .collect();
    let mut scaled = a.clone();
    for (j, s) in scales.iter().enumerate() {
        scaled.column_mut(j).scale_mut(1.0 / s);
    }
    let svd = scaled.svd(true, true);
    let x = svd.solve(b, 1e-13).ok()?;
    let x = DVector::from_iterator(x.len(), x.iter().zip(&scales).map(|(v, s)| v / s));
    let r = a * &x - b;
    let rms = (r.norm_squared() / b.len().max(1) as f64).sqrt();
    Some((x, rms))
}
