use nalgebra::DMatrix;
use num_complex::Complex64;

use super::blocks::OperatorBlock;
use crate::error::{Error, Result};

const QL_ITERATIONS: usize = 60;
const JACOBI_SWEEPS: usize = 100;

/// Eigenvalues in ascending order; eigenvectors as columns when requested.
#[derive(Clone, Debug)]
pub struct Eigensystem {
    pub values: Vec<f64>,
    pub vectors: Option<DMatrix<Complex64>>,
}

/// Implicit-shift QL on a real symmetric tridiagonal matrix with diagonal `d`
/// and sub-diagonal `e` (`e.len() == d.len() - 1`). Returns ascending
/// eigenvalues and the orthogonal eigenvector matrix.
pub fn tridiagonal_ql(d: &[f64], e: &[f64], label: &str) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = d.len();
    if n == 0 {
        return Ok((Vec::new(), DMatrix::zeros(0, 0)));
    }
    if e.len() + 1 != n {
        return Err(Error::Parameter("sub-diagonal length must be n - 1".into()));
    }
    let mut d = d.to_vec();
    let mut e: Vec<f64> = e.iter().copied().chain(std::iter::once(0.0)).collect();
    let mut z = DMatrix::<f64>::identity(n, n);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > QL_ITERATIONS {
                return Err(Error::Solver { label: label.to_string() });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    let zk = z[(k, i + 1)];
                    z[(k, i + 1)] = s * z[(k, i)] + c * zk;
                    z[(k, i)] = c * z[(k, i)] - s * zk;
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|a, b| d[*a].total_cmp(&d[*b]));
    let values = order.iter().map(|&k| d[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| z[(r, order[c])]);
    Ok((values, vectors))
}

/// Cyclic Jacobi rotations on a real symmetric matrix.
pub fn jacobi_symmetric(a: &DMatrix<f64>, label: &str) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = a.nrows();
    let mut a = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let norm = a.norm();
    let mut converged = n <= 1 || norm == 0.0;
    for _ in 0..JACOBI_SWEEPS {
        if converged {
            break;
        }
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += a[(p, q)] * a[(p, q)];
            }
        }
        if off.sqrt() <= f64::EPSILON * norm {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let tau = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        return Err(Error::Solver { label: label.to_string() });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|x, y| a[(*x, *x)].total_cmp(&a[(*y, *y)]));
    let values = order.iter().map(|&k| a[(k, k)]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok((values, vectors))
}

/// Largest deviation from Hermitian symmetry relative to the Frobenius norm.
pub fn hermiticity_defect(a: &DMatrix<Complex64>) -> f64 {
    let norm = a.norm();
    if norm == 0.0 {
        return 0.0;
    }
    let n = a.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst / norm
}

fn is_real_tridiagonal(a: &DMatrix<Complex64>) -> bool {
    let n = a.nrows();
    (0..n).all(|i| {
        (0..n).all(|j| {
            let v = a[(i, j)];
            v.im == 0.0 && (v.re == 0.0 || i.abs_diff(j) <= 1)
        })
    })
}

/// Eigen-decomposition of a Hermitian matrix. Real symmetric tridiagonal
/// input goes through implicit-shift QL, anything else through cyclic Jacobi
/// on the real embedding `[[Re, -Im], [Im, Re]]`.
pub fn hermitian_eigen(a: &DMatrix<Complex64>, tol: f64, label: &str) -> Result<Eigensystem> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Parameter(format!("block {label} is not square")));
    }
    if hermiticity_defect(a) > 1e-14 {
        return Err(Error::Parameter(format!("block {label} is not Hermitian")));
    }
    let (values, vectors) = if is_real_tridiagonal(a) {
        let d: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
        let e: Vec<f64> = (1..n).map(|i| a[(i, i - 1)].re).collect();
        let (values, z) = tridiagonal_ql(&d, &e, label)?;
        (values, z.map(|x| Complex64::new(x, 0.0)))
    } else {
        embedded_jacobi(a, label)?
    };
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for (k, lambda) in values.iter().enumerate() {
        let v = vectors.column(k);
        let r = (a * v - v * Complex64::new(*lambda, 0.0)).norm();
        if r > tol * scale.max(f64::MIN_POSITIVE) && r > 0.0 {
            return Err(Error::Solver { label: label.to_string() });
        }
    }
    Ok(Eigensystem {
        values,
        vectors: Some(vectors),
    })
}

fn embedded_jacobi(a: &DMatrix<Complex64>, label: &str) -> Result<(Vec<f64>, DMatrix<Complex64>)> {
    let n = a.nrows();
    let m = DMatrix::from_fn(2 * n, 2 * n, |r, c| {
        let (i, j) = (r % n, c % n);
        let z = a[(i, j)];
        match (r < n, c < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    let (vals, vecs) = jacobi_symmetric(&m, label)?;
    // Each eigenvalue appears twice; inside a cluster the real vectors span
    // v and i·v, so Gram–Schmidt keeps half of them.
    let mut values = Vec::with_capacity(n);
    let mut vectors = DMatrix::<Complex64>::zeros(n, n);
    let spread = vals.last().unwrap_or(&0.0) - vals.first().unwrap_or(&0.0);
    let gap = 1e-9 * spread.max(1.0);
    let mut start = 0;
    while start < vals.len() {
        let mut end = start + 1;
        while end < vals.len() && vals[end] - vals[end - 1] <= gap {
            end += 1;
        }
        let want = (end - start) / 2;
        let mut accepted: Vec<nalgebra::DVector<Complex64>> = Vec::new();
        for k in start..end {
            if accepted.len() == want {
                break;
            }
            let mut c = nalgebra::DVector::from_fn(n, |i, _| {
                Complex64::new(vecs[(i, k)], vecs[(i + n, k)])
            });
            for q in &accepted {
                let proj = q.dotc(&c);
                c -= q * proj;
            }
            let norm = c.norm();
            if norm > 0.5 {
                accepted.push(c / Complex64::new(norm, 0.0));
            }
        }
        if accepted.len() != want {
            return Err(Error::Solver { label: label.to_string() });
        }
        for (idx, q) in accepted.into_iter().enumerate() {
            vectors.set_column(values.len(), &q);
            values.push(vals[start + 2 * idx]);
        }
        start = end;
    }
    Ok((values, vectors))
}

/// Diagonalizes one operator block.
pub fn eigensolve(block: &OperatorBlock, tol: f64, with_vectors: bool) -> Result<Eigensystem> {
    let mut sys = hermitian_eigen(&block.matrix, tol, &block.label.to_string())?;
    if !with_vectors {
        sys.vectors = None;
    }
    Ok(sys)
}
