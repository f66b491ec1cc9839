use std::f64::consts::TAU;

use num_integer::Integer;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::period::{period_basis_at, PeriodBasis};
use crate::error::{Error, Result};
use crate::models::{IntegrableModel, MomentValue};

/// Integer matrix expressing the transported period basis in the starting
/// basis: row `i` holds the coordinates of the new `i`-th basis vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonodromyMatrix {
    pub entries: [[i64; 2]; 2],
    /// Distance of the transported coordinates from the rounded integers.
    pub residual: f64,
}

impl MonodromyMatrix {
    pub fn identity() -> Self {
        Self {
            entries: [[1, 0], [0, 1]],
            residual: 0.0,
        }
    }

    pub fn det(&self) -> i64 {
        let m = &self.entries;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn trace(&self) -> i64 {
        self.entries[0][0] + self.entries[1][1]
    }

    pub fn is_identity(&self) -> bool {
        self.entries == [[1, 0], [0, 1]]
    }

    /// True when the matrix is conjugate in GL(2, ℤ) to `[[1,0],[1,1]]`.
    pub fn is_elementary_unipotent(&self) -> bool {
        if self.det() != 1 || self.trace() != 2 || self.is_identity() {
            return false;
        }
        let m = &self.entries;
        let g = (m[0][0] - 1)
            .gcd(&m[0][1])
            .gcd(&m[1][0])
            .gcd(&(m[1][1] - 1));
        g == 1
    }
}

/// The representative of `t` modulo 2π closest to `reference`.
pub(crate) fn lift_near(t: f64, reference: f64) -> f64 {
    t + TAU * ((reference - t) / TAU).round()
}

fn close_polyline(points: &[MomentValue]) -> Vec<MomentValue> {
    let mut out = points.to_vec();
    if let (Some(first), Some(last)) = (points.first(), points.last())
        && first.dist(last) > 1e-12 {
            out.push(*first);
        }
    out
}

/// Period bases along a closed polyline, with `τ₁` lifted continuously.
pub(crate) fn transport(
    model: &IntegrableModel,
    points: &[MomentValue],
    tol: f64,
) -> Result<Vec<PeriodBasis>> {
    let closed = close_polyline(points);
    if closed.len() < 3 {
        return Err(Error::Parameter("loop needs at least three vertices".into()));
    }
    transport_path(model, &closed, tol)
}

/// Period bases along an open polyline, refined until consecutive values
/// differ by less than 5%. The vertices of the polyline are among the
/// returned sample points; `τ₁` is lifted continuously from its value in
/// `[0, 2π)` at the first vertex.
pub(crate) fn transport_path(
    model: &IntegrableModel,
    closed: &[MomentValue],
    tol: f64,
) -> Result<Vec<PeriodBasis>> {
    if closed.len() < 2 {
        return Err(Error::Parameter("path needs at least two vertices".into()));
    }
    let mut path: Vec<MomentValue> = Vec::new();
    for w in closed.windows(2) {
        let pieces = ((w[0].dist(&w[1]) / 0.05).ceil() as usize).max(1);
        for k in 0..pieces {
            let s = k as f64 / pieces as f64;
            path.push(MomentValue::new(
                w[0].a + s * (w[1].a - w[0].a),
                w[0].b + s * (w[1].b - w[0].b),
            ));
        }
    }
    path.push(*closed.last().unwrap());

    let mut bases: Vec<Option<PeriodBasis>> = vec![None; path.len()];
    for _round in 0..14 {
        let missing: Vec<usize> = (0..path.len()).filter(|i| bases[*i].is_none()).collect();
        let computed: Vec<(usize, Result<PeriodBasis>)> = missing
            .par_iter()
            .map(|&i| (i, period_basis_at(model, path[i], tol)))
            .collect();
        for (i, r) in computed {
            bases[i] = Some(r?);
        }
        let mut refined_path = Vec::with_capacity(path.len());
        let mut refined_bases = Vec::with_capacity(path.len());
        let mut any = false;
        for i in 0..path.len() {
            refined_path.push(path[i]);
            refined_bases.push(bases[i].clone());
            if i + 1 == path.len() {
                break;
            }
            let (x, y) = (bases[i].as_ref().unwrap(), bases[i + 1].as_ref().unwrap());
            let d1 = (lift_near(y.tau1(), x.tau1()) - x.tau1()).abs();
            let d2 = (y.tau2() - x.tau2()).abs();
            if d1 > 0.05 * TAU || d2 > 0.05 * x.tau2().min(y.tau2()) {
                any = true;
                refined_path.push(MomentValue::new(
                    0.5 * (path[i].a + path[i + 1].a),
                    0.5 * (path[i].b + path[i + 1].b),
                ));
                refined_bases.push(None);
            }
        }
        path = refined_path;
        bases = refined_bases;
        if !any {
            let mut out: Vec<PeriodBasis> = bases.into_iter().map(|b| b.unwrap()).collect();
            for i in 1..out.len() {
                let prev = out[i - 1].second.0;
                out[i].second.0 = lift_near(out[i].second.0, prev);
            }
            return Ok(out);
        }
    }
    let c = path[0];
    Err(Error::TransportFailure {
        a: c.a,
        b: c.b,
        reason: "period lattice varies too fast to transport".into(),
    })
}

/// Holonomy of the period lattice around a closed polyline in the base.
pub fn classical_monodromy(
    model: &IntegrableModel,
    loop_points: &[MomentValue],
    tol: f64,
) -> Result<MonodromyMatrix> {
    let bases = transport(model, loop_points, tol)?;
    let start = &bases[0];
    let end = bases.last().unwrap();
    let k_real = (end.second.0 - start.second.0) / TAU;
    let k = k_real.round();
    let residual = (k_real - k)
        .abs()
        .max((end.second.1 - start.second.1).abs() / start.second.1);
    if residual >= 1e-3 {
        return Err(Error::TransportFailure {
            a: start.at.a,
            b: start.at.b,
            reason: format!("non-integer holonomy (residual {residual:.3e})"),
        });
    }
    Ok(MonodromyMatrix {
        entries: [[1, 0], [k as i64, 1]],
        residual,
    })
}

/// Axis-aligned rectangle traversed counterclockwise.
pub fn rectangle_loop(center: MomentValue, half_width: f64, half_height: f64) -> Vec<MomentValue> {
    let (a, b) = (center.a, center.b);
    vec![
        MomentValue::new(a + half_width, b),
        MomentValue::new(a + half_width, b + half_height),
        MomentValue::new(a - half_width, b + half_height),
        MomentValue::new(a - half_width, b - half_height),
        MomentValue::new(a + half_width, b - half_height),
    ]
}
