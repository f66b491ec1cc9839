//! Critical points of the moment map, Williamson classification and
//! bifurcation diagrams.

mod diagram;

pub use diagram::{
    BaseBox, BifurcationDiagram, Branch, CriticalValue, Extremum, RankOneCurve, SemitoricReport,
    LevelSolver, Verdict, bifurcation_diagram, check_semitoric, default_base_box,
    default_phase_box, level_extremum,
};

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{ChartPoint, IntegrableModel, Observable};
use crate::numerics::manifold_lm;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WilliamsonType {
    pub k: usize,
    pub k_e: usize,
    pub k_h: usize,
    pub k_ff: usize,
}

impl WilliamsonType {
    pub const fn new(k: usize, k_e: usize, k_h: usize, k_ff: usize) -> Self {
        Self { k, k_e, k_h, k_ff }
    }

    pub fn dof(&self) -> usize {
        self.k + self.k_e + self.k_h + 2 * self.k_ff
    }

    pub fn is_focus_focus(&self) -> bool {
        self.k_ff > 0
    }

    pub fn label(&self) -> &'static str {
        match (self.k, self.k_e, self.k_h, self.k_ff) {
            (0, 2, 0, 0) => "elliptic-elliptic",
            (0, 0, 0, 1) => "focus-focus",
            (0, 1, 1, 0) => "elliptic-hyperbolic",
            (0, 0, 2, 0) => "hyperbolic-hyperbolic",
            (1, 1, 0, 0) => "elliptic-regular",
            (1, 0, 1, 0) => "hyperbolic-regular",
            (2, 0, 0, 0) => "regular",
            _ => "other",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub point: ChartPoint,
    pub rank: usize,
    pub wtype: WilliamsonType,
    /// Eigenvalues `(re, im)` of the linearized generic combination on the
    /// symplectic complement of the orbit.
    pub eigenvalues: Vec<(f64, f64)>,
    pub nondegenerate: bool,
}

/// Axis-aligned box in ambient phase-space coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

const RANK_THRESHOLD: f64 = 1e-7;
const AXIS_TOL: f64 = 1e-8;
const AMBIGUOUS_TOL: f64 = 1e-6;
const FD_STEP: f64 = 1e-5;
const SEED: u64 = 42;

/// Numerical rank of dF at `p`, from the singular values of `(X_J, X_H)`.
pub fn numerical_rank(model: &IntegrableModel, p: &DVector<f64>) -> usize {
    let xj = model.vector_field(Observable::J, p);
    let xh = model.vector_field(Observable::H, p);
    let m = DMatrix::from_columns(&[xj, xh]);
    let sv = m.singular_values();
    let top = sv.max().max(1.0);
    sv.iter().filter(|s| **s > RANK_THRESHOLD * top).count()
}

/// Matrix of the linearized Hamiltonian vector field of `obs` at a zero of
/// that field, in an orthonormal tangent basis.
pub fn linearization(model: &IntegrableModel, obs: Observable, p: &DVector<f64>) -> DMatrix<f64> {
    let q = model.tangent_basis(p);
    let n = q.ncols();
    let mut b = DMatrix::zeros(n, n);
    for j in 0..n {
        let e = q.column(j).into_owned();
        let xp = model.vector_field(obs, &(p + &e * FD_STEP));
        let xm = model.vector_field(obs, &(p - &e * FD_STEP));
        let d = (xp - xm) / (2.0 * FD_STEP);
        b.set_column(j, &(q.transpose() * d));
    }
    b
}

/// Eigenvalues of a real square matrix.
///
/// The Schur iteration can stall on exactly structured inputs, so a failed
/// attempt is repeated on an orthogonally conjugated copy.
pub fn spectrum(b: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    let n = b.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut m = b.clone();
    for _ in 0..8 {
        if let Some(s) = Schur::try_new(m.clone(), f64::EPSILON, 10_000) {
            return Ok(s.complex_eigenvalues().iter().copied().collect());
        }
        let r = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let q = r.qr().q();
        m = q.transpose() * b * &q;
    }
    Err(Error::Solver {
        label: "real Schur decomposition".into(),
    })
}

/// Coefficients `(c₁, c₂)` of the combination of J and H whose vector field
/// vanishes at a rank-1 point.
fn kernel_combination(model: &IntegrableModel, p: &DVector<f64>) -> (f64, f64) {
    let xj = model.vector_field(Observable::J, p);
    let xh = model.vector_field(Observable::H, p);
    let m = DMatrix::from_columns(&[xj, xh]);
    let svd = m.svd(false, true);
    let vt = svd.v_t.expect("requested");
    let (i, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    (vt[(i, 0)], vt[(i, 1)])
}

enum Pattern {
    Clear(WilliamsonType, bool),
    Retry,
    Ambiguous,
}

fn read_pattern(eigs: &[Complex64], rank: usize, n: usize) -> Pattern {
    let scale = eigs.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Pattern::Clear(WilliamsonType::new(rank, n - rank, 0, 0), false);
    }
    let mut sorted: Vec<Complex64> = eigs.to_vec();
    sorted.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    // The orbit directions contribute 2·rank (near) zero eigenvalues.
    let transverse = &sorted[2 * rank..];
    let (mut zeros, mut imag, mut real, mut complex) = (0, 0, 0, 0);
    for z in transverse {
        let (re, im) = (z.re.abs(), z.im.abs());
        if z.norm() <= AMBIGUOUS_TOL * scale {
            zeros += 1;
        } else if re <= AXIS_TOL * scale {
            imag += 1;
        } else if im <= AXIS_TOL * scale {
            real += 1;
        } else if re <= AMBIGUOUS_TOL * scale || im <= AMBIGUOUS_TOL * scale {
            return Pattern::Ambiguous;
        } else {
            complex += 1;
        }
    }
    // Collisions between distinct blocks make the pattern non-generic.
    for i in 0..transverse.len() {
        for j in i + 1..transverse.len() {
            if (transverse[i] - transverse[j]).norm() <= AMBIGUOUS_TOL * scale {
                return Pattern::Retry;
            }
        }
    }
    if zeros > 0 {
        return Pattern::Retry;
    }
    if imag % 2 != 0 || real % 2 != 0 || complex % 4 != 0 {
        return Pattern::Ambiguous;
    }
    Pattern::Clear(
        WilliamsonType::new(rank, imag / 2, real / 2, complex / 4),
        true,
    )
}

fn zero_pattern(eigs: &[Complex64], rank: usize, n: usize) -> WilliamsonType {
    // Degenerate spectrum: count what is readable and report the zero pairs
    // as elliptic, flagged degenerate by the caller.
    let scale = eigs
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
        .max(1e-300);
    let mut sorted: Vec<Complex64> = eigs.to_vec();
    sorted.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    let transverse = &sorted[2 * rank..];
    let real = transverse
        .iter()
        .filter(|z| z.norm() > AMBIGUOUS_TOL * scale && z.im.abs() <= AXIS_TOL * scale)
        .count();
    let complex = transverse
        .iter()
        .filter(|z| z.re.abs() > AMBIGUOUS_TOL * scale && z.im.abs() > AMBIGUOUS_TOL * scale)
        .count();
    let kh = real / 2;
    let kff = complex / 4;
    WilliamsonType::new(rank, n - rank - kh - 2 * kff, kh, kff)
}

/// Classifies a critical point with an explicit generator for the generic
/// combination.
pub fn classify_with<R: Rng>(
    model: &IntegrableModel,
    p: &DVector<f64>,
    rng: &mut R,
) -> Result<CriticalPoint> {
    let n = model.dof();
    let rank = numerical_rank(model, p);
    if rank >= n {
        return Err(Error::Parameter("point is regular (rank dF = n)".into()));
    }
    let mut last: Vec<Complex64> = Vec::new();
    let mut ambiguous = false;
    for _ in 0..5 {
        let obs = if rank == 0 {
            let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            Observable::Combination(theta.cos(), theta.sin())
        } else {
            let (c1, c2) = kernel_combination(model, p);
            Observable::Combination(c1, c2)
        };
        let b = linearization(model, obs, p);
        let eigs = spectrum(&b)?;
        last = eigs.clone();
        match read_pattern(&eigs, rank, n) {
            Pattern::Clear(wtype, nondegenerate) => {
                return Ok(CriticalPoint {
                    point: model.point_from(p),
                    rank,
                    wtype,
                    eigenvalues: eigs.iter().map(|z| (z.re, z.im)).collect(),
                    nondegenerate,
                });
            }
            Pattern::Ambiguous => ambiguous = true,
            Pattern::Retry => ambiguous = false,
        }
        if rank > 0 {
            break;
        }
    }
    if ambiguous {
        return Err(Error::ClassificationUncertain {
            eigenvalues: last.iter().map(|z| (z.re, z.im)).collect(),
        });
    }
    Ok(CriticalPoint {
        point: model.point_from(p),
        rank,
        wtype: zero_pattern(&last, rank, n),
        eigenvalues: last.iter().map(|z| (z.re, z.im)).collect(),
        nondegenerate: false,
    })
}

/// Williamson classification of a critical point.
pub fn classify_point(model: &IntegrableModel, p: &ChartPoint) -> Result<CriticalPoint> {
    let v = model.check_point(p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    classify_with(model, &v, &mut rng)
}

/// Multi-start search for rank-0 points of F in a phase-space box.
///
/// Every grid seed is projected onto the constraint set and driven to a
/// common zero of `X_J` and `X_H` by Levenberg–Marquardt. Converged points
/// closer than 1e−5 are merged and the result is sorted lexicographically.
pub fn find_critical_points(
    model: &IntegrableModel,
    region: &PhaseBox,
    grid_density: usize,
    newton_tol: f64,
) -> Result<Vec<CriticalPoint>> {
    let d = model.dim();
    if region.lo.len() != d || region.hi.len() != d {
        return Err(Error::Parameter(format!(
            "phase region must have {d} coordinates"
        )));
    }
    let density = grid_density.max(1);
    let total = density.pow(d as u32);
    let found: Vec<DVector<f64>> = (0..total)
        .into_par_iter()
        .filter_map(|idx| {
            let mut rest = idx;
            let mut seed = DVector::zeros(d);
            for i in 0..d {
                let cell = rest % density;
                rest /= density;
                let f = (cell as f64 + 0.5) / density as f64;
                seed[i] = region.lo[i] + f * (region.hi[i] - region.lo[i]);
            }
            let mut s = seed.clone();
            model.project(&mut s);
            if s.iter().any(|v| !v.is_finite()) {
                return None;
            }
            let residual = |p: &DVector<f64>, _: &DVector<f64>| {
                let xj = model.vector_field(Observable::J, p);
                let xh = model.vector_field(Observable::H, p);
                DVector::from_iterator(2 * d, xj.iter().chain(xh.iter()).copied())
            };
            let solved = manifold_lm(
                model,
                &s,
                &DVector::zeros(0),
                residual,
                newton_tol * 1e-3,
                60,
            )?;
            if solved.residual < newton_tol && model.check(&solved.point).is_ok() {
                Some(solved.point)
            } else {
                None
            }
        })
        .collect();
    let mut unique: Vec<DVector<f64>> = Vec::new();
    for p in found {
        if !unique.iter().any(|q| (q - &p).norm() < 1e-5) {
            unique.push(p);
        }
    }
    unique.sort_by(|a, b| {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    unique
        .iter()
        .map(|p| {
            let mut clean = p.clone();
            for v in clean.iter_mut() {
                if v.abs() < 1e-13 {
                    *v = 0.0;
                }
            }
            model.project(&mut clean);
            classify_with(model, &clean, &mut rng)
        })
        .collect()
}
