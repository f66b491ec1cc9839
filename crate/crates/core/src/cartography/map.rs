use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::actions::{period_basis_at, transport_path};
use crate::error::{Error, Result};
use crate::models::{IntegrableModel, MomentValue, Observable, PhaseBound};
use crate::numerics::gauss_legendre;
use crate::singularities::{
    default_base_box, default_phase_box, find_critical_points, BaseBox, Extremum, LevelSolver,
};

const SHOOT_TOL: f64 = 1e-10;
const GL_NODES: usize = 6;
/// Fraction of the local vertical extent kept between the lifting path and
/// the lower boundary.
const LIFT_OFFSET: f64 = 0.02;

/// Vertical cuts through the focus-focus values, upward for `ε = +1` and
/// downward for `ε = −1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutSpec {
    pub epsilons: Vec<i8>,
    pub focus_values: Vec<MomentValue>,
}

impl CutSpec {
    pub fn new(epsilons: Vec<i8>, focus_values: Vec<MomentValue>) -> Result<Self> {
        if epsilons.len() != focus_values.len() {
            return Err(Error::Parameter(format!(
                "{} cut signs for {} focus values",
                epsilons.len(),
                focus_values.len()
            )));
        }
        if epsilons.iter().any(|e| *e != 1 && *e != -1) {
            return Err(Error::Parameter("cut signs must be +1 or -1".into()));
        }
        Ok(Self {
            epsilons,
            focus_values,
        })
    }

    /// The same sign for every focus value of the model.
    pub fn uniform(model: &IntegrableModel, eps: i8) -> Result<Self> {
        let foci: Vec<MomentValue> = rank_zero_values(model)?
            .into_iter()
            .filter(|(_, ff)| *ff)
            .map(|(c, _)| c)
            .collect();
        Self::new(vec![eps; foci.len()], foci)
    }
}

/// One vertical line `J = x` of the map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapColumn {
    pub x: f64,
    pub h_min: f64,
    pub h_max: Option<f64>,
    /// Second component of the image of the lower boundary point.
    pub bottom: f64,
    /// Vertical extent of the image; absent when H is unbounded on `J = x`.
    pub extent: Option<f64>,
    /// Second component of the map at the grid rows, `None` off the image.
    pub values: Vec<Option<f64>>,
}

/// Cartographic map `(x, y) ↦ (x, f⁽²⁾(x, y))` sampled on columns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CartographicMap {
    pub cut: CutSpec,
    pub region: BaseBox,
    /// J-values of the rank-zero critical values inside the sampled range,
    /// together with the ends of the range.
    pub breakpoints: Vec<f64>,
    /// Integer slope of the image of the lower boundary between
    /// consecutive breakpoints.
    pub slopes: Vec<i64>,
    /// Largest distance of a measured boundary slope from its integer.
    pub slope_residual: f64,
    pub rows: Vec<f64>,
    pub columns: Vec<MapColumn>,
    /// Images of the focus values.
    pub marked: Vec<MomentValue>,
    pub compact: bool,
}

impl CartographicMap {
    /// Second component of the image of the lower boundary at `x`.
    pub fn bottom_at(&self, x: f64) -> f64 {
        bottom_from(&self.breakpoints, &self.slopes, x)
    }
}

fn bottom_from(edges: &[f64], slopes: &[i64], x: f64) -> f64 {
    let mut y = 0.0;
    for (k, m) in slopes.iter().enumerate() {
        let (lo, hi) = (edges[k], edges[k + 1]);
        if x <= lo {
            break;
        }
        y += *m as f64 * (x.min(hi) - lo);
    }
    y
}

/// Rank-zero critical values, flagged when focus-focus.
pub(crate) fn rank_zero_values(model: &IntegrableModel) -> Result<Vec<(MomentValue, bool)>> {
    let pts = find_critical_points(model, &default_phase_box(model), 3, 1e-9)?;
    Ok(pts
        .into_iter()
        .filter(|p| p.rank == 0)
        .map(|p| {
            let (a, b) = model.moment(&p.point.vector());
            (MomentValue::new(a, b), p.wtype.is_focus_focus())
        })
        .collect())
}

/// Level extrema of H on the levels of J.
pub(crate) struct Levels<'a> {
    pub model: &'a IntegrableModel,
    solver: LevelSolver<'a>,
}

impl<'a> Levels<'a> {
    pub fn new(model: &'a IntegrableModel) -> Self {
        Self {
            model,
            solver: LevelSolver::new(model, PhaseBound::default(), 4000),
        }
    }

    /// Minimum of H on `J = x` and its derivative in `x`.
    pub fn min(&self, x: f64) -> Result<(f64, f64)> {
        let (h, p) = self
            .solver
            .solve(x, Extremum::Min, None)
            .ok_or(Error::NoFiberPoint { a: x, b: f64::NAN })?;
        let xj = self.model.vector_field(Observable::J, &p);
        let xh = self.model.vector_field(Observable::H, &p);
        let n = xj.norm_squared();
        let mu = if n > 0.0 { xh.dot(&xj) / n } else { 0.0 };
        Ok((h, mu))
    }

    pub fn max(&self, x: f64) -> Result<Option<f64>> {
        if !self.model.j_is_proper() {
            return Ok(None);
        }
        let (h, _) = self
            .solver
            .solve(x, Extremum::Max, None)
            .ok_or(Error::NoFiberPoint { a: x, b: f64::NAN })?;
        Ok(Some(h))
    }
}

/// Cumulative integrals of `τ₂/2π` over `J = x` between consecutive mesh
/// heights, starting at zero on `mesh[0]`.
pub(crate) fn cumulative_tau2(model: &IntegrableModel, x: f64, mesh: &[f64]) -> Result<Vec<f64>> {
    let (nodes, weights) = gauss_legendre(GL_NODES);
    let jobs: Vec<(usize, f64, f64)> = mesh
        .windows(2)
        .enumerate()
        .flat_map(|(k, w)| {
            let (mid, half) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
            nodes
                .iter()
                .zip(&weights)
                .map(move |(s, wt)| (k, mid + half * s, half * wt))
                .collect::<Vec<_>>()
        })
        .collect();
    let parts: Vec<(usize, f64)> = jobs
        .par_iter()
        .map(|(k, s, w)| {
            period_basis_at(model, MomentValue::new(x, *s), SHOOT_TOL).map(|p| (*k, w * p.tau2() / TAU))
        })
        .collect::<Result<_>>()?;
    let mut pieces = vec![0.0; mesh.len().saturating_sub(1)];
    for (k, v) in parts {
        pieces[k] += v;
    }
    let mut out = vec![0.0];
    for p in pieces {
        out.push(out.last().unwrap() + p);
    }
    Ok(out)
}

/// Mesh over `[lo, hi]` through `extra`, with pieces no longer than a
/// quarter of the interval and geometric grading toward each height in
/// `singular`.
pub(crate) fn column_mesh(lo: f64, hi: f64, extra: &[f64], singular: &[f64]) -> Vec<f64> {
    let len = hi - lo;
    let mut pts = vec![lo, hi];
    pts.extend((1..4).map(|k| lo + len * k as f64 / 4.0));
    pts.extend(extra.iter().copied().filter(|y| *y > lo && *y < hi));
    for s in singular.iter().copied().filter(|s| *s > lo && *s <= hi) {
        pts.push(s);
        for k in 1..=16 {
            let f = 3f64.powi(-k);
            pts.push(s - f * (s - lo));
            if s < hi {
                pts.push(s + f * (hi - s));
            }
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-13 * len.max(1.0));
    pts
}

/// Vertical extent of the image over `J = x`.
pub(crate) fn extent_at(
    levels: &Levels,
    x: f64,
    foci: &[MomentValue],
    near: f64,
) -> Result<Option<(f64, f64, f64)>> {
    let (lo, _) = levels.min(x)?;
    let Some(hi) = levels.max(x)? else {
        return Ok(None);
    };
    let singular: Vec<f64> = foci
        .iter()
        .filter(|f| (f.a - x).abs() <= near)
        .map(|f| f.b)
        .collect();
    let mesh = column_mesh(lo, hi, &[], &singular);
    let cum = cumulative_tau2(levels.model, x, &mesh)?;
    Ok(Some((lo, hi, *cum.last().unwrap())))
}

/// Sorted distinct J-values of the rank-zero critical values, clipped to
/// the sampled range, with the range ends.
fn edges_for(model: &IntegrableModel, region: &BaseBox, crit: &[(MomentValue, bool)]) -> Result<Vec<f64>> {
    let mut xs: Vec<f64> = crit.iter().map(|(c, _)| c.a).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup_by(|a, b| (*a - *b).abs() < 1e-7);
    let lo = if model.j_is_proper() && !xs.is_empty() {
        region.a_lo.max(xs[0])
    } else {
        region.a_lo
    };
    let hi = if model.is_compact() && !xs.is_empty() {
        region.a_hi.min(*xs.last().unwrap())
    } else {
        region.a_hi
    };
    if hi <= lo {
        return Err(Error::Parameter("empty J-range for the map".into()));
    }
    let mut edges = vec![lo];
    edges.extend(xs.into_iter().filter(|x| *x > lo + 1e-9 && *x < hi - 1e-9));
    edges.push(hi);
    Ok(edges)
}

/// Integer slopes of the image of the lower boundary on each interval,
/// measured at points just above the boundary whose `τ₁` is lifted along a
/// path that passes each cut on its open side.
fn lower_slopes(
    levels: &Levels,
    edges: &[f64],
    cut: &CutSpec,
    default_height: f64,
) -> Result<(Vec<i64>, f64)> {
    let model = levels.model;
    let offset = |x: f64| -> Result<(f64, f64)> {
        let (lo, mu) = levels.min(x)?;
        let ext = match levels.max(x)? {
            Some(hi) => hi - lo,
            None => default_height,
        };
        Ok((lo + LIFT_OFFSET * ext, mu))
    };
    let n = edges.len() - 1;
    let mids: Vec<f64> = (0..n).map(|k| 0.5 * (edges[k] + edges[k + 1])).collect();
    let mut route: Vec<MomentValue> = Vec::new();
    let mut anchors: Vec<(usize, f64)> = Vec::new();
    for k in 0..n {
        let (y, mu) = offset(mids[k])?;
        anchors.push((route.len(), mu));
        route.push(MomentValue::new(mids[k], y));
        if k + 1 == n {
            break;
        }
        let xb = edges[k + 1];
        let d = 0.25 * (edges[k + 1] - edges[k]).min(edges[k + 2] - edges[k + 1]);
        let below_cut = cut
            .focus_values
            .iter()
            .zip(&cut.epsilons)
            .find(|(f, e)| (f.a - xb).abs() < 1e-7 && **e < 0)
            .map(|(f, _)| *f);
        let steps = 6;
        for s in 1..steps {
            let x = mids[k] + (xb - d - mids[k]) * s as f64 / steps as f64;
            route.push(MomentValue::new(x, offset(x)?.0));
        }
        match below_cut {
            Some(f) => {
                // Pass above the focus value.
                let top = levels
                    .max(xb)?
                    .map(|h| f.b + 0.25 * (h - f.b))
                    .unwrap_or(f.b + 0.25 * default_height);
                route.push(MomentValue::new(xb - d, offset(xb - d)?.0));
                route.push(MomentValue::new(xb - d, top));
                route.push(MomentValue::new(xb + d, top));
                route.push(MomentValue::new(xb + d, offset(xb + d)?.0));
            }
            None => {
                for x in [xb - d, xb, xb + d] {
                    route.push(MomentValue::new(x, offset(x)?.0));
                }
            }
        }
        for s in 1..steps {
            let x = xb + d + (mids[k + 1] - xb - d) * s as f64 / steps as f64;
            route.push(MomentValue::new(x, offset(x)?.0));
        }
    }
    let bases = if route.len() == 1 {
        vec![period_basis_at(model, route[0], SHOOT_TOL)?]
    } else {
        transport_path(model, &route, SHOOT_TOL)?
    };
    let mut slopes = Vec::with_capacity(n);
    let mut residual: f64 = 0.0;
    for (idx, mu) in anchors {
        let at = route[idx];
        let b = bases
            .iter()
            .min_by(|p, q| p.at.dist(&at).total_cmp(&q.at.dist(&at)))
            .unwrap();
        let m = (b.tau1() + b.tau2() * mu) / TAU;
        residual = residual.max((m - m.round()).abs());
        slopes.push(m.round() as i64);
    }
    if residual > 0.25 {
        return Err(Error::TransportFailure {
            a: route[0].a,
            b: route[0].b,
            reason: format!("lower boundary slope is not integral (off by {residual:.3})"),
        });
    }
    Ok((slopes, residual))
}

/// Closed range of J over M; infinite ends are unbounded.
pub fn j_range(model: &IntegrableModel) -> Result<(f64, f64)> {
    if !model.j_is_proper() {
        return Ok((f64::NEG_INFINITY, f64::INFINITY));
    }
    let xs: Vec<f64> = rank_zero_values(model)?.iter().map(|(c, _)| c.a).collect();
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = if model.is_compact() {
        xs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    } else {
        f64::INFINITY
    };
    Ok((lo, hi))
}

/// Cartographic map over the default base box of the model.
pub fn cartographic_map(
    model: &IntegrableModel,
    cut: &CutSpec,
    resolution: usize,
) -> Result<CartographicMap> {
    cartographic_map_in(model, cut, &default_base_box(model), resolution, resolution)
}

/// Cartographic map over `region` with `columns` vertical lines and
/// `rows` grid heights per line (`rows = 0` samples only the boundary).
pub fn cartographic_map_in(
    model: &IntegrableModel,
    cut: &CutSpec,
    region: &BaseBox,
    columns: usize,
    rows: usize,
) -> Result<CartographicMap> {
    if !model.has_circle_action() || model.dof() != 2 {
        return Err(Error::Parameter(format!(
            "{} has no global circle action",
            model.name()
        )));
    }
    if columns < 2 {
        return Err(Error::Parameter("map needs at least two columns".into()));
    }
    let crit = rank_zero_values(model)?;
    let foci: Vec<MomentValue> = crit.iter().filter(|(_, f)| *f).map(|(c, _)| *c).collect();
    for f in &foci {
        if !cut.focus_values.iter().any(|g| g.dist(f) < 1e-6) && region.contains(f) {
            return Err(Error::Parameter(format!(
                "no cut through the focus value ({}, {})",
                f.a, f.b
            )));
        }
    }
    let levels = Levels::new(model);
    let edges = edges_for(model, region, &crit)?;
    let height = region.b_hi - region.b_lo;
    let (slopes, slope_residual) = lower_slopes(&levels, &edges, cut, height)?;

    let (x_lo, x_hi) = (edges[0], *edges.last().unwrap());
    let dx = (x_hi - x_lo) / columns as f64;
    let grid: Vec<f64> = (0..rows)
        .map(|j| region.b_lo + height * (j as f64 + 0.5) / rows as f64)
        .collect();
    let mut cols = Vec::with_capacity(columns);
    for i in 0..columns {
        let x = x_lo + dx * (i as f64 + 0.5);
        let (lo, _) = levels.min(x)?;
        let hi = levels.max(x)?;
        let top = hi.unwrap_or(region.b_hi);
        let singular: Vec<f64> = cut
            .focus_values
            .iter()
            .filter(|f| (f.a - x).abs() <= 2.0 * dx)
            .map(|f| f.b)
            .collect();
        let mesh = column_mesh(lo, top.max(lo), &grid, &singular);
        let cum = cumulative_tau2(model, x, &mesh)?;
        let bottom = bottom_from(&edges, &slopes, x);
        let values = grid
            .iter()
            .map(|y| {
                if *y < lo || *y > top {
                    return None;
                }
                mesh.iter()
                    .position(|m| (m - y).abs() < 1e-12 * height.max(1.0))
                    .map(|k| bottom + cum[k])
            })
            .collect();
        cols.push(MapColumn {
            x,
            h_min: lo,
            h_max: hi,
            bottom,
            extent: hi.map(|_| *cum.last().unwrap()),
            values,
        });
    }

    let mut marked = Vec::new();
    for f in &cut.focus_values {
        if f.a < x_lo || f.a > x_hi {
            continue;
        }
        let (lo, _) = levels.min(f.a)?;
        let mesh = column_mesh(lo, f.b, &[], &[f.b]);
        let cum = cumulative_tau2(model, f.a, &mesh[..mesh.len() - 1])?;
        // The last piece ends on the singular fiber; its share is below the
        // grading resolution and is bounded by the preceding piece.
        marked.push(MomentValue::new(
            f.a,
            bottom_from(&edges, &slopes, f.a) + cum.last().unwrap(),
        ));
    }

    Ok(CartographicMap {
        cut: cut.clone(),
        region: *region,
        breakpoints: edges,
        slopes,
        slope_residual,
        rows: grid,
        columns: cols,
        marked,
        compact: model.is_compact(),
    })
}
