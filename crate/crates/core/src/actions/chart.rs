use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::monodromy::lift_near;
use super::period::period_basis_at;
use crate::error::{Error, Result};
use crate::models::{IntegrableModel, MomentValue};
use crate::numerics::gauss_legendre;
use crate::singularities::BaseBox;

const GL_POINTS: usize = 4;

/// Action coordinates sampled on a grid over a regular region of the base.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionChart {
    pub base_point: MomentValue,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// `g1[i][j] = a[i] − a₀`.
    pub g1: Vec<Vec<f64>>,
    /// Second action at `(a[i], b[j])`.
    pub g2: Vec<Vec<f64>>,
    /// Lifted periods `(τ₁, τ₂)` at the grid nodes.
    pub periods: Vec<Vec<(f64, f64)>>,
    /// Largest plaquette integral of the second period form.
    pub max_defect: f64,
}

/// One straight edge: quadrature samples of the period form between two
/// grid nodes.
struct Edge {
    from: MomentValue,
    to: MomentValue,
    taus: Vec<(f64, f64)>,
    weights: Vec<f64>,
}

impl Edge {
    /// Integral of `(τ₁ da + τ₂ db)/2π` with `τ₁` lifted continuously from
    /// `start_tau1`. Returns the integral and the lift reached at the end.
    fn integrate(&self, start_tau1: f64, end_tau1: f64) -> (f64, f64) {
        let (da, db) = (self.to.a - self.from.a, self.to.b - self.from.b);
        let mut lift = start_tau1;
        let mut sum = 0.0;
        for ((t1, t2), w) in self.taus.iter().zip(&self.weights) {
            lift = lift_near(*t1, lift);
            sum += 0.5 * w * (lift * da + t2 * db);
        }
        (sum / TAU, lift_near(end_tau1, lift))
    }
}

fn sample_edge(
    model: &IntegrableModel,
    from: MomentValue,
    to: MomentValue,
    nodes: &(Vec<f64>, Vec<f64>),
    tol: f64,
) -> Result<Edge> {
    let (x, w) = nodes;
    let taus = x
        .iter()
        .map(|s| {
            let f = 0.5 * (s + 1.0);
            let c = MomentValue::new(from.a + f * (to.a - from.a), from.b + f * (to.b - from.b));
            period_basis_at(model, c, tol).map(|p| p.second)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Edge {
        from,
        to,
        taus,
        weights: w.clone(),
    })
}

/// Path integrals of the period forms over a grid of `n × n` nodes in
/// `region`, normalized so that both actions vanish at `c0`.
pub fn action_integrals(
    model: &IntegrableModel,
    region: &BaseBox,
    c0: MomentValue,
    n: usize,
    tol: f64,
) -> Result<ActionChart> {
    if n < 2 {
        return Err(Error::Parameter("action grid needs at least 2 nodes per side".into()));
    }
    let a: Vec<f64> = (0..n)
        .map(|i| region.a_lo + (region.a_hi - region.a_lo) * i as f64 / (n - 1) as f64)
        .collect();
    let b: Vec<f64> = (0..n)
        .map(|j| region.b_lo + (region.b_hi - region.b_lo) * j as f64 / (n - 1) as f64)
        .collect();
    let node = |i: usize, j: usize| MomentValue::new(a[i], b[j]);
    let gl = gauss_legendre(GL_POINTS);

    let node_taus: Vec<(f64, f64)> = (0..n * n)
        .into_par_iter()
        .map(|k| period_basis_at(model, node(k / n, k % n), tol).map(|p| p.second))
        .collect::<Result<_>>()?;
    let tau_at = |i: usize, j: usize| node_taus[i * n + j];

    // Horizontal edges (i,j)→(i+1,j) and vertical edges (i,j)→(i,j+1).
    let horizontal: Vec<Edge> = (0..(n - 1) * n)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / n, k % n);
            sample_edge(model, node(i, j), node(i + 1, j), &gl, tol)
        })
        .collect::<Result<_>>()?;
    let vertical: Vec<Edge> = (0..n * (n - 1))
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / (n - 1), k % (n - 1));
            sample_edge(model, node(i, j), node(i, j + 1), &gl, tol)
        })
        .collect::<Result<_>>()?;
    let h_edge = |i: usize, j: usize| &horizontal[i * n + j];
    let v_edge = |i: usize, j: usize| &vertical[i * (n - 1) + j];

    // Comb spanning tree: along the bottom row, then up every column.
    let mut lift = vec![vec![0.0; n]; n];
    let mut g2 = vec![vec![0.0; n]; n];
    lift[0][0] = tau_at(0, 0).0;
    for i in 1..n {
        let (dg, l) = h_edge(i - 1, 0).integrate(lift[i - 1][0], tau_at(i, 0).0);
        g2[i][0] = g2[i - 1][0] + dg;
        lift[i][0] = l;
    }
    for i in 0..n {
        for j in 1..n {
            let (dg, l) = v_edge(i, j - 1).integrate(lift[i][j - 1], tau_at(i, j).0);
            g2[i][j] = g2[i][j - 1] + dg;
            lift[i][j] = l;
        }
    }

    let mut max_defect: f64 = 0.0;
    for i in 0..n - 1 {
        for j in 0..n - 1 {
            let (bottom, l1) = h_edge(i, j).integrate(lift[i][j], tau_at(i + 1, j).0);
            let (right, l2) = v_edge(i + 1, j).integrate(l1, tau_at(i + 1, j + 1).0);
            let (top, _) = h_edge(i, j + 1).integrate(lift[i][j + 1], tau_at(i + 1, j + 1).0);
            let (left, _) = v_edge(i, j).integrate(lift[i][j], tau_at(i, j + 1).0);
            let mismatch = (l2 - lift[i + 1][j + 1]).abs() / TAU;
            let defect = (bottom + right - top - left).abs() + mismatch;
            max_defect = max_defect.max(defect);
            if defect > 1e-4 {
                return Err(Error::NonClosedForm {
                    defect,
                    a: 0.5 * (a[i] + a[i + 1]),
                    b: 0.5 * (b[j] + b[j + 1]),
                });
            }
        }
    }

    // Shift so that the actions vanish at c0, integrating from the
    // nearest node.
    let near_i = (0..n)
        .min_by(|x, y| (a[*x] - c0.a).abs().total_cmp(&(a[*y] - c0.a).abs()))
        .unwrap();
    let near_j = (0..n)
        .min_by(|x, y| (b[*x] - c0.b).abs().total_cmp(&(b[*y] - c0.b).abs()))
        .unwrap();
    let to_c0 = sample_edge(model, node(near_i, near_j), c0, &gl, tol)?;
    let (offset, _) = to_c0.integrate(lift[near_i][near_j], 0.0);
    let g0 = g2[near_i][near_j] + offset;
    for row in g2.iter_mut() {
        for v in row.iter_mut() {
            *v -= g0;
        }
    }
    let g1 = (0..n).map(|i| vec![a[i] - c0.a; n]).collect();
    let periods = (0..n)
        .map(|i| (0..n).map(|j| (lift[i][j], tau_at(i, j).1)).collect())
        .collect();
    Ok(ActionChart {
        base_point: c0,
        a,
        b,
        g1,
        g2,
        periods,
        max_defect,
    })
}
