use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::actions::{rectangle_loop, MonodromyMatrix};
use crate::error::{Error, Result};
use crate::models::MomentValue;
use crate::quantum::JointSpectrum;

/// Local basis of the joint-spectrum lattice at a spectral point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeCell {
    pub base: [f64; 2],
    pub e1: [f64; 2],
    pub e2: [f64; 2],
}

impl LatticeCell {
    pub fn det(&self) -> f64 {
        cross(self.e1, self.e2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransportOptions {
    /// Two snapping candidates closer than this multiple of ħ make the
    /// lattice ambiguous.
    pub ambiguity: f64,
    /// Largest accepted distance of the holonomy from an integer matrix.
    pub max_residual: f64,
}

impl Default for TransportOptions {
    fn default() -> Self {
        Self {
            ambiguity: 0.2,
            max_residual: 0.2,
        }
    }
}

fn cross(u: [f64; 2], v: [f64; 2]) -> f64 {
    u[0] * v[1] - u[1] * v[0]
}

fn add(u: [f64; 2], v: [f64; 2]) -> [f64; 2] {
    [u[0] + v[0], u[1] + v[1]]
}

fn sub(u: [f64; 2], v: [f64; 2]) -> [f64; 2] {
    [u[0] - v[0], u[1] - v[1]]
}

fn norm(u: [f64; 2]) -> f64 {
    u[0].hypot(u[1])
}

/// Trusted spectral points bucketed on a grid of cell size ħ.
pub(crate) struct PointIndex {
    pts: Vec<[f64; 2]>,
    cell: f64,
    grid: HashMap<(i64, i64), Vec<usize>>,
}

impl PointIndex {
    pub fn new(spec: &JointSpectrum) -> Self {
        let pts: Vec<[f64; 2]> = spec.trusted().map(|p| [p.mu, p.lambda]).collect();
        let cell = spec.hbar;
        let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, p) in pts.iter().enumerate() {
            grid.entry(Self::key(*p, cell)).or_default().push(i);
        }
        Self { pts, cell, grid }
    }

    fn key(p: [f64; 2], cell: f64) -> (i64, i64) {
        ((p[0] / cell).floor() as i64, (p[1] / cell).floor() as i64)
    }

    pub fn point(&self, i: usize) -> [f64; 2] {
        self.pts[i]
    }

    /// Points within `radius` of `q`, sorted by distance.
    pub fn within(&self, q: [f64; 2], radius: f64) -> Vec<(usize, f64)> {
        let r = (radius / self.cell).ceil() as i64;
        let (kx, ky) = Self::key(q, self.cell);
        let mut out = Vec::new();
        for dx in -r..=r {
            for dy in -r..=r {
                if let Some(v) = self.grid.get(&(kx + dx, ky + dy)) {
                    for &i in v {
                        let d = norm(sub(self.pts[i], q));
                        if d <= radius {
                            out.push((i, d));
                        }
                    }
                }
            }
        }
        out.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        out
    }
}

struct Walker<'a> {
    index: &'a PointIndex,
    hbar: f64,
    opts: TransportOptions,
}

impl Walker<'_> {
    fn fail(&self, at: [f64; 2], reason: impl Into<String>) -> Error {
        Error::TransportFailure {
            a: at[0],
            b: at[1],
            reason: reason.into(),
        }
    }

    /// Nearest lattice point to `q`, rejecting holes and near-ties.
    fn snap(&self, q: [f64; 2], reach: f64) -> Result<usize> {
        let near = self.index.within(q, reach);
        let Some(&(i, d1)) = near.first() else {
            return Err(self.fail(q, "no spectral point within reach"));
        };
        if let Some(&(_, d2)) = near.get(1)
            && d2 - d1 < self.opts.ambiguity * self.hbar {
                return Err(self.fail(q, "ambiguous lattice continuation"));
            }
        Ok(i)
    }

    fn cell_at(&self, q: [f64; 2]) -> Result<(usize, LatticeCell)> {
        // Any nearby point may serve as the base; ties are harmless here.
        let &(b, _) = self
            .index
            .within(q, 2.0 * self.hbar)
            .first()
            .ok_or_else(|| self.fail(q, "no spectral point within reach"))?;
        let base = self.index.point(b);
        let near = self.index.within(base, 4.0 * self.hbar);
        let mut vecs = near
            .iter()
            .filter(|(i, _)| *i != b)
            .map(|(i, _)| sub(self.index.point(*i), base));
        let e1 = vecs
            .next()
            .ok_or_else(|| self.fail(base, "isolated spectral point"))?;
        let e2 = vecs
            .find(|v| cross(e1, *v).abs() >= 0.5 * norm(e1) * norm(*v))
            .ok_or_else(|| self.fail(base, "spectral points are collinear"))?;
        let (e1, e2) = gauss_reduce(e1, e2);
        let (e1, e2) = if cross(e1, e2) < 0.0 { (e1, [-e2[0], -e2[1]]) } else { (e1, e2) };
        Ok((b, LatticeCell { base, e1, e2 }))
    }

    fn moved(&self, cell: &LatticeCell, step: [f64; 2]) -> Result<(usize, LatticeCell)> {
        let reach = 0.5 * norm(cell.e1).min(norm(cell.e2));
        let b = self.snap(add(cell.base, step), reach)?;
        let base = self.index.point(b);
        let e1 = sub(self.index.point(self.snap(add(base, cell.e1), reach)?), base);
        let e2 = sub(self.index.point(self.snap(add(base, cell.e2), reach)?), base);
        let next = LatticeCell { base, e1, e2 };
        if next.det() < 1e-3 * self.hbar * self.hbar {
            return Err(self.fail(base, "degenerate lattice cell"));
        }
        Ok((b, next))
    }
}

/// Lagrange–Gauss reduction of a planar basis.
fn gauss_reduce(mut u: [f64; 2], mut v: [f64; 2]) -> ([f64; 2], [f64; 2]) {
    if norm(u) > norm(v) {
        std::mem::swap(&mut u, &mut v);
    }
    loop {
        let mu = ((u[0] * v[0] + u[1] * v[1]) / (u[0] * u[0] + u[1] * u[1])).round();
        v = [v[0] - mu * u[0], v[1] - mu * u[1]];
        if norm(v) >= norm(u) {
            return (u, v);
        }
        std::mem::swap(&mut u, &mut v);
    }
}

fn waypoints(path: &[MomentValue], spacing: f64) -> Vec<[f64; 2]> {
    let mut pts: Vec<[f64; 2]> = path.iter().map(|m| [m.a, m.b]).collect();
    if let (Some(f), Some(l)) = (pts.first().copied(), pts.last().copied())
        && norm(sub(f, l)) > 1e-12 {
            pts.push(f);
        }
    let mut out = vec![pts[0]];
    for w in pts.windows(2) {
        let n = (norm(sub(w[1], w[0])) / spacing).ceil().max(1.0) as usize;
        for k in 1..=n {
            let t = k as f64 / n as f64;
            out.push([w[0][0] + t * (w[1][0] - w[0][0]), w[0][1] + t * (w[1][1] - w[0][1])]);
        }
    }
    out
}

pub fn quantum_monodromy(spec: &JointSpectrum, path: &[MomentValue]) -> Result<MonodromyMatrix> {
    quantum_monodromy_with(spec, path, &TransportOptions::default())
}

/// Transports a lattice cell around the closed polyline `path` by
/// nearest-point continuation and expresses the returned basis in the
/// starting one: `E_end = E_start · M`.
pub fn quantum_monodromy_with(
    spec: &JointSpectrum,
    path: &[MomentValue],
    opts: &TransportOptions,
) -> Result<MonodromyMatrix> {
    let index = PointIndex::new(spec);
    transport(&index, spec.hbar, path, opts)
}

fn transport(
    index: &PointIndex,
    hbar: f64,
    path: &[MomentValue],
    opts: &TransportOptions,
) -> Result<MonodromyMatrix> {
    if path.len() < 3 {
        return Err(Error::Parameter("a loop needs at least three points".into()));
    }
    let walker = Walker {
        index,
        hbar,
        opts: *opts,
    };
    let (b0, start) = walker.cell_at([path[0].a, path[0].b])?;
    let spacing = 0.5 * norm(start.e1).min(norm(start.e2));
    let mut wps = waypoints(path, spacing);
    *wps.last_mut().unwrap() = start.base;
    let (mut b, mut cell) = (b0, start);
    let mut budget = 200 * wps.len() + 1000;
    for w in &wps {
        loop {
            let moves = [
                cell.e1,
                cell.e2,
                add(cell.e1, cell.e2),
                sub(cell.e1, cell.e2),
            ];
            let here = norm(sub(cell.base, *w));
            // Score the snapped points, not the predictions, so every
            // accepted move strictly approaches the waypoint.
            let mut best: Option<(f64, [f64; 2])> = None;
            for m in moves.iter().flat_map(|m| [*m, [-m[0], -m[1]]]) {
                let reach = 0.5 * norm(cell.e1).min(norm(cell.e2));
                let near = index.within(add(cell.base, m), reach);
                if let Some(&(i, _)) = near.first() {
                    let d = norm(sub(index.point(i), *w));
                    if best.is_none_or(|(bd, _)| d < bd) {
                        best = Some((d, m));
                    }
                }
            }
            let Some((d, m)) = best else {
                return Err(walker.fail(cell.base, "no lattice neighbours"));
            };
            if d >= here - 1e-12 {
                break;
            }
            if budget == 0 {
                return Err(walker.fail(cell.base, "lattice walk did not settle"));
            }
            budget -= 1;
            (b, cell) = walker.moved(&cell, m)?;
        }
    }
    if b != b0 {
        return Err(walker.fail(cell.base, "walk did not return to the starting point"));
    }
    // Solve E_start · M = E_end column by column.
    let d = start.det();
    let solve = |v: [f64; 2]| [cross(v, start.e2) / d, cross(start.e1, v) / d];
    let c1 = solve(cell.e1);
    let c2 = solve(cell.e2);
    let real = [[c1[0], c2[0]], [c1[1], c2[1]]];
    let mut entries = [[0i64; 2]; 2];
    let mut residual: f64 = 0.0;
    for r in 0..2 {
        for c in 0..2 {
            entries[r][c] = real[r][c].round() as i64;
            residual = residual.max((real[r][c] - real[r][c].round()).abs());
        }
    }
    if residual >= opts.max_residual {
        return Err(walker.fail(
            start.base,
            format!("holonomy residual {residual:.3} from the nearest integer matrix"),
        ));
    }
    Ok(MonodromyMatrix { entries, residual })
}

/// Lattice cell at the spectral point nearest `at`.
pub fn lattice_cell(spec: &JointSpectrum, at: MomentValue) -> Result<LatticeCell> {
    let index = PointIndex::new(spec);
    let walker = Walker {
        index: &index,
        hbar: spec.hbar,
        opts: TransportOptions::default(),
    };
    Ok(walker.cell_at([at.a, at.b])?.1)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FocusDetection {
    pub estimates: Vec<MomentValue>,
    /// Centroids of the loop clusters before the level-spacing refinement.
    pub centroids: Vec<MomentValue>,
    /// Clusters too spread out or too sparse to be a single value.
    pub ambiguous: Vec<MomentValue>,
    pub loops: usize,
    pub failed_loops: usize,
}

/// Half-width of detection loops, in units of ħ.
const LOOP_HALF_WIDTH: f64 = 5.0;

/// Scans square loops centred on a grid of spacing ħ across the trusted part
/// of the spectrum. Centres whose holonomy is not the identity are clustered;
/// each cluster's λ is then refined to the smallest level gap on the nearest
/// Ĵ-line, where the level density of a focus-focus value peaks.
pub fn detect_focus_focus(spec: &JointSpectrum) -> Result<FocusDetection> {
    let h = spec.hbar;
    let w = LOOP_HALF_WIDTH * h;
    let trusted: Vec<[f64; 2]> = spec.trusted().map(|p| [p.mu, p.lambda]).collect();
    if trusted.is_empty() {
        return Ok(FocusDetection {
            estimates: Vec::new(),
            centroids: Vec::new(),
            ambiguous: Vec::new(),
            loops: 0,
            failed_loops: 0,
        });
    }
    let lo = trusted.iter().fold([f64::INFINITY; 2], |m, p| [m[0].min(p[0]), m[1].min(p[1])]);
    let hi = trusted
        .iter()
        .fold([f64::NEG_INFINITY; 2], |m, p| [m[0].max(p[0]), m[1].max(p[1])]);
    let nx = ((hi[0] - lo[0] - 2.0 * w) / h).floor();
    let ny = ((hi[1] - lo[1] - 2.0 * w) / h).floor();
    let mut centers = Vec::new();
    if nx >= 0.0 && ny >= 0.0 {
        for i in 0..=nx as usize {
            for j in 0..=ny as usize {
                centers.push(MomentValue::new(
                    lo[0] + w + h * i as f64,
                    lo[1] + w + h * j as f64,
                ));
            }
        }
    }
    let index = PointIndex::new(spec);
    let opts = TransportOptions::default();
    let outcomes: Vec<Option<bool>> = centers
        .par_iter()
        .map(|c| {
            transport(&index, h, &rectangle_loop(*c, w, w), &opts)
                .ok()
                .map(|m| !m.is_identity())
        })
        .collect();
    let failed = outcomes.iter().filter(|o| o.is_none()).count();
    let hits: Vec<MomentValue> = centers
        .iter()
        .zip(&outcomes)
        .filter(|(_, o)| **o == Some(true))
        .map(|(c, _)| *c)
        .collect();

    // Single-linkage clustering on the grid.
    let mut label = vec![usize::MAX; hits.len()];
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for s in 0..hits.len() {
        if label[s] != usize::MAX {
            continue;
        }
        let id = clusters.len();
        let mut members = vec![s];
        label[s] = id;
        let mut k = 0;
        while k < members.len() {
            let p = hits[members[k]];
            for q in 0..hits.len() {
                if label[q] == usize::MAX && p.dist(&hits[q]) <= 1.5 * h {
                    label[q] = id;
                    members.push(q);
                }
            }
            k += 1;
        }
        clusters.push(members);
    }

    let full = (2.0 * LOOP_HALF_WIDTH).powi(2);
    let mut detection = FocusDetection {
        estimates: Vec::new(),
        centroids: Vec::new(),
        ambiguous: Vec::new(),
        loops: centers.len(),
        failed_loops: failed,
    };
    for members in clusters {
        let n = members.len() as f64;
        let (sa, sb) = members
            .iter()
            .fold((0.0, 0.0), |s, i| (s.0 + hits[*i].a, s.1 + hits[*i].b));
        let centroid = MomentValue::new(sa / n, sb / n);
        let spread = members
            .iter()
            .map(|i| {
                let p = hits[*i];
                (p.a - centroid.a).abs().max((p.b - centroid.b).abs())
            })
            .fold(0.0, f64::max);
        if n < 0.25 * full || spread > 2.0 * w {
            detection.ambiguous.push(centroid);
            continue;
        }
        detection.centroids.push(centroid);
        detection.estimates.push(refine_on_line(spec, centroid, w));
    }
    Ok(detection)
}

fn nearest_line(spec: &JointSpectrum, mu: f64) -> Option<f64> {
    spec.trusted()
        .map(|p| p.mu)
        .min_by(|a, b| (a - mu).abs().total_cmp(&(b - mu).abs()))
}

fn refine_on_line(spec: &JointSpectrum, c: MomentValue, w: f64) -> MomentValue {
    let Some(line) = nearest_line(spec, c.a) else {
        return c;
    };
    let levels: Vec<f64> = spec
        .trusted()
        .filter(|p| (p.mu - line).abs() <= 1e-9 && (p.lambda - c.b).abs() <= w)
        .map(|p| p.lambda)
        .collect();
    levels
        .windows(2)
        .min_by(|x, y| (x[1] - x[0]).total_cmp(&(y[1] - y[0])))
        .map_or(c, |g| MomentValue::new(line, 0.5 * (g[0] + g[1])))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeEstimate {
    pub value: f64,
    /// The Ĵ-line used.
    pub line: f64,
    pub count: usize,
    pub warnings: Vec<String>,
}

/// ħ times the number of joint eigenvalues on the Ĵ-line through `focus`
/// lying below it, with multiplicity. The spectrum must reach the bottom of
/// the line.
pub fn volume_invariant(spec: &JointSpectrum, focus: MomentValue) -> Result<VolumeEstimate> {
    let line = nearest_line(spec, focus.a)
        .ok_or_else(|| Error::Parameter("spectrum has no trusted points".into()))?;
    let mut warnings = Vec::new();
    if (line - focus.a).abs() > 0.5 * spec.hbar {
        return Err(Error::Parameter(format!(
            "no Ĵ-line within ħ/2 of μ = {}",
            focus.a
        )));
    }
    if (line - focus.a).abs() > 1e-9 {
        warnings.push(format!(
            "μ = {} is off the eigenvalue grid; using the line μ = {line}",
            focus.a
        ));
    }
    let count: usize = spec
        .points
        .iter()
        .filter(|p| (p.mu - line).abs() <= 1e-9 && p.lambda < focus.b)
        .map(|p| p.multiplicity as usize)
        .sum();
    Ok(VolumeEstimate {
        value: spec.hbar * count as f64,
        line,
        count,
        warnings,
    })
}
