use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::map::CartographicMap;
use crate::actions::{format_rational, parse_rational};
use crate::error::{Error, Result};

pub type RationalPoint = (BigRational, BigRational);

const SNAP_DENOMINATOR: i64 = 1_000_000;
const SNAP_ERROR: f64 = 1e-6;
const VERTEX_ANGLE: f64 = 1e-3;

/// Best rational approximation with denominator at most `max_den`, by
/// continued fractions.
pub fn best_rational(x: f64, max_den: i64) -> Option<BigRational> {
    if !x.is_finite() {
        return None;
    }
    let (mut p0, mut q0, mut p1, mut q1) = (0i128, 1i128, 1i128, 0i128);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        if a.abs() > 1e15 {
            break;
        }
        let a = a as i128;
        let (p2, q2) = (a * p1 + p0, a * q1 + q0);
        if q2 > max_den as i128 {
            break;
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let frac = r - a as f64;
        if frac.abs() < 1e-15 {
            break;
        }
        r = 1.0 / frac;
    }
    if q1 == 0 {
        return None;
    }
    Some(BigRational::new(BigInt::from(p1), BigInt::from(q1)))
}

/// Snaps `x` to a small-denominator rational within the snapping error, or
/// returns its exact binary value flagged as unsnapped.
pub fn snap(x: f64) -> (BigRational, bool) {
    if let Some(r) = best_rational(x, SNAP_DENOMINATOR)
        && (r.to_f64().unwrap_or(f64::NAN) - x).abs() <= SNAP_ERROR {
            return (r, true);
        }
    (
        BigRational::from_float(x).unwrap_or_else(BigRational::zero),
        false,
    )
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MarkedPoint {
    /// Image of the focus value.
    pub c: RationalPoint,
    /// Twisting index.
    pub kappa: i64,
}

/// Convex polygon with one marked point and twisting index per focus value.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DecoratedPolygon {
    pub epsilons: Vec<i8>,
    /// Counter-clockwise, starting at the lexicographically smallest vertex.
    pub vertices: Vec<RationalPoint>,
    pub marked: Vec<MarkedPoint>,
    /// Indices of vertices that could not be snapped to small-denominator
    /// rationals.
    pub unsnapped: Vec<usize>,
}

fn cross(o: &RationalPoint, a: &RationalPoint, b: &RationalPoint) -> BigRational {
    (&a.0 - &o.0) * (&b.1 - &o.1) - (&a.1 - &o.1) * (&b.0 - &o.0)
}

/// Drops repeated and collinear vertices, orients counter-clockwise and
/// starts at the lexicographically smallest vertex.
pub fn canonical_vertices(vertices: &[RationalPoint]) -> Vec<RationalPoint> {
    let mut v: Vec<RationalPoint> = Vec::with_capacity(vertices.len());
    for p in vertices {
        if v.last() != Some(p) {
            v.push(p.clone());
        }
    }
    while v.len() > 1 && v.first() == v.last() {
        v.pop();
    }
    loop {
        let n = v.len();
        if n < 3 {
            break;
        }
        let drop = (0..n).find(|&i| cross(&v[(i + n - 1) % n], &v[i], &v[(i + 1) % n]).is_zero());
        match drop {
            Some(i) => {
                v.remove(i);
            }
            None => break,
        }
    }
    let n = v.len();
    if n >= 3 {
        let twice_area: BigRational = (0..n)
            .map(|i| {
                let (p, q) = (&v[i], &v[(i + 1) % n]);
                &p.0 * &q.1 - &q.0 * &p.1
            })
            .fold(BigRational::zero(), |s, t| s + t);
        if twice_area.is_negative() {
            v.reverse();
        }
    }
    if let Some(start) = (0..n).min_by(|&i, &j| v[i].cmp(&v[j])) {
        v.rotate_left(start);
    }
    v
}

/// Element `(x, y) ↦ (x + t_a, k·x + y + t_b)` of the vertical group.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct VElement {
    pub k: i64,
    pub translation: RationalPoint,
}

impl VElement {
    pub fn identity() -> Self {
        Self {
            k: 0,
            translation: (BigRational::zero(), BigRational::zero()),
        }
    }

    pub fn apply(&self, p: &RationalPoint) -> RationalPoint {
        let k = BigRational::from_integer(BigInt::from(self.k));
        (
            &p.0 + &self.translation.0,
            k * &p.0 + &p.1 + &self.translation.1,
        )
    }

    /// `self ∘ first`: apply `first`, then `self`.
    pub fn after(&self, first: &VElement) -> VElement {
        let k2 = BigRational::from_integer(BigInt::from(self.k));
        VElement {
            k: self.k + first.k,
            translation: (
                &first.translation.0 + &self.translation.0,
                k2 * &first.translation.0 + &first.translation.1 + &self.translation.1,
            ),
        }
    }

    pub fn inverse(&self) -> VElement {
        let k = BigRational::from_integer(BigInt::from(self.k));
        let ta = -&self.translation.0;
        let tb = &k * &self.translation.0 - &self.translation.1;
        VElement {
            k: -self.k,
            translation: (ta, tb),
        }
    }
}

/// Action of the vertical group: vertices and marked points are mapped,
/// twisting indices shift by `k`.
pub fn v_action(dp: &DecoratedPolygon, rho: &VElement) -> DecoratedPolygon {
    let vertices: Vec<RationalPoint> = dp.vertices.iter().map(|p| rho.apply(p)).collect();
    DecoratedPolygon {
        epsilons: dp.epsilons.clone(),
        vertices: canonical_vertices(&vertices),
        marked: dp
            .marked
            .iter()
            .map(|m| MarkedPoint {
                c: rho.apply(&m.c),
                kappa: m.kappa + rho.k,
            })
            .collect(),
        unsnapped: dp.unsnapped.clone(),
    }
}

/// Change of cut signs `ε ↦ ε′·ε`: the piecewise shear with `kᵢ = εᵢ(1 − ε′ᵢ)/2`
/// to the right of each marked line, leaving marked points and twisting
/// indices unchanged.
pub fn epsilon_action(dp: &DecoratedPolygon, eps_prime: &[i8]) -> Result<DecoratedPolygon> {
    if eps_prime.len() != dp.epsilons.len() || dp.marked.len() != dp.epsilons.len() {
        return Err(Error::Parameter(format!(
            "{} signs for {} marked points",
            eps_prime.len(),
            dp.marked.len()
        )));
    }
    if eps_prime.iter().any(|e| *e != 1 && *e != -1) {
        return Err(Error::Parameter("signs must be +1 or -1".into()));
    }
    let ks: Vec<(BigRational, i64)> = dp
        .marked
        .iter()
        .zip(&dp.epsilons)
        .zip(eps_prime)
        .map(|((m, e), ep)| (m.c.0.clone(), (*e as i64) * (1 - *ep as i64) / 2))
        .filter(|(_, k)| *k != 0)
        .collect();
    // Break the boundary on every marked vertical line before shearing.
    let mut pts: Vec<RationalPoint> = Vec::new();
    let n = dp.vertices.len();
    for i in 0..n {
        let (p, q) = (&dp.vertices[i], &dp.vertices[(i + 1) % n]);
        pts.push(p.clone());
        let mut cuts: Vec<BigRational> = ks
            .iter()
            .map(|(x, _)| x.clone())
            .filter(|x| (&p.0 < x && x < &q.0) || (&q.0 < x && x < &p.0))
            .collect();
        cuts.sort();
        if q.0 < p.0 {
            cuts.reverse();
        }
        cuts.dedup();
        for x in cuts {
            let t = (&x - &p.0) / (&q.0 - &p.0);
            pts.push((x, &p.1 + t * (&q.1 - &p.1)));
        }
    }
    let sheared: Vec<RationalPoint> = pts
        .into_iter()
        .map(|(x, y)| {
            let mut dy = BigRational::zero();
            for (xi, k) in &ks {
                if &x > xi {
                    dy += BigRational::from_integer(BigInt::from(*k)) * (&x - xi);
                }
            }
            (x, y + dy)
        })
        .collect();
    Ok(DecoratedPolygon {
        epsilons: dp
            .epsilons
            .iter()
            .zip(eps_prime)
            .map(|(e, ep)| e * ep)
            .collect(),
        vertices: canonical_vertices(&sheared),
        marked: dp.marked.clone(),
        unsnapped: Vec::new(),
    })
}

/// Primitive integer direction of the segment `p → q`.
fn primitive(p: &RationalPoint, q: &RationalPoint) -> (BigInt, BigInt) {
    let dx = &q.0 - &p.0;
    let dy = &q.1 - &p.1;
    let l = dx.denom().lcm(dy.denom());
    let ix = (dx * BigRational::from_integer(l.clone())).to_integer();
    let iy = (dy * BigRational::from_integer(l)).to_integer();
    let g = ix.gcd(&iy);
    if g.is_zero() {
        (ix, iy)
    } else {
        (ix / &g, iy / &g)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolygonReport {
    pub convex: bool,
    pub simple: bool,
    pub rational: bool,
    /// Unimodularity of each vertex, in vertex order.
    pub smooth_vertices: Vec<bool>,
    pub failures: Vec<String>,
}

fn segments_cross(a: &RationalPoint, b: &RationalPoint, c: &RationalPoint, d: &RationalPoint) -> bool {
    let sign = |x: BigRational| {
        if x.is_positive() {
            1
        } else if x.is_negative() {
            -1
        } else {
            0
        }
    };
    let (d1, d2) = (sign(cross(a, b, c)), sign(cross(a, b, d)));
    let (d3, d4) = (sign(cross(c, d, a)), sign(cross(c, d, b)));
    if d1 * d2 < 0 && d3 * d4 < 0 {
        return true;
    }
    let on = |p: &RationalPoint, q: &RationalPoint, r: &RationalPoint| {
        r.0 >= p.0.clone().min(q.0.clone())
            && r.0 <= p.0.clone().max(q.0.clone())
            && r.1 >= p.1.clone().min(q.1.clone())
            && r.1 <= p.1.clone().max(q.1.clone())
    };
    (d1 == 0 && on(a, b, c))
        || (d2 == 0 && on(a, b, d))
        || (d3 == 0 && on(c, d, a))
        || (d4 == 0 && on(c, d, b))
}

pub fn check_polygon(dp: &DecoratedPolygon) -> PolygonReport {
    let v = &dp.vertices;
    let n = v.len();
    let mut failures = Vec::new();
    if n < 3 {
        failures.push(format!("only {n} vertices"));
        return PolygonReport {
            convex: false,
            simple: false,
            rational: dp.unsnapped.is_empty(),
            smooth_vertices: vec![false; n],
            failures,
        };
    }
    let mut convex = true;
    for i in 0..n {
        if !cross(&v[(i + n - 1) % n], &v[i], &v[(i + 1) % n]).is_positive() {
            convex = false;
            failures.push(format!("reflex or flat vertex {i}"));
        }
    }
    let mut simple = true;
    for i in 0..n {
        for j in i + 1..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            if segments_cross(&v[i], &v[(i + 1) % n], &v[j], &v[(j + 1) % n]) {
                simple = false;
                failures.push(format!("edges {i} and {j} intersect"));
            }
        }
    }
    let cap = BigInt::from(SNAP_DENOMINATOR);
    let mut rational = dp.unsnapped.is_empty();
    for i in &dp.unsnapped {
        failures.push(format!("vertex {i} has no small-denominator coordinates"));
    }
    for i in 0..n {
        let (a, b) = primitive(&v[i], &v[(i + 1) % n]);
        if a.abs() > cap || b.abs() > cap {
            rational = false;
            failures.push(format!("edge {i} has irrational slope"));
        }
    }
    let smooth_vertices = (0..n)
        .map(|i| {
            let (ax, ay) = primitive(&v[(i + n - 1) % n], &v[i]);
            let (bx, by) = primitive(&v[i], &v[(i + 1) % n]);
            (ax * by - ay * bx).abs().is_one()
        })
        .collect();
    PolygonReport {
        convex,
        simple,
        rational,
        smooth_vertices,
        failures,
    }
}

/// Corners traced from the boundary of a cartographic map of a compact
/// model, before rational snapping. A corner sits where the boundary
/// direction turns by more than 10⁻³ rad.
pub fn polygon_corners(cm: &CartographicMap) -> Result<Vec<(f64, f64)>> {
    if !cm.compact {
        return Err(Error::Parameter(
            "polygon extraction needs a compact phase space".into(),
        ));
    }
    let edges = &cm.breakpoints;
    let n_int = edges.len() - 1;
    // Straight-line fit of the extent over each interval, from columns
    // away from the interval ends.
    let mut fits = Vec::with_capacity(n_int);
    let mut interior: Vec<Vec<(f64, f64)>> = Vec::with_capacity(n_int);
    for k in 0..n_int {
        let (lo, hi) = (edges[k], edges[k + 1]);
        let margin = 0.15 * (hi - lo);
        let pts: Vec<(f64, f64)> = cm
            .columns
            .iter()
            .filter(|c| c.x > lo + margin && c.x < hi - margin)
            .filter_map(|c| c.extent.map(|e| (c.x, e)))
            .collect();
        if pts.len() < 2 {
            return Err(Error::Parameter(format!(
                "too few columns between J = {lo} and J = {hi}"
            )));
        }
        let m = pts.len() as f64;
        let (sx, sy) = pts.iter().fold((0.0, 0.0), |s, p| (s.0 + p.0, s.1 + p.1));
        let (mx, my) = (sx / m, sy / m);
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let slope = sxy / sxx;
        fits.push((slope, my - slope * mx));
        interior.push(pts);
    }
    let extent_at_edge = |k: usize| -> f64 {
        let eval = |f: &(f64, f64)| (f.0 * edges[k] + f.1).max(0.0);
        match k {
            0 => eval(&fits[0]),
            k if k == n_int => eval(&fits[n_int - 1]),
            k => 0.5 * (eval(&fits[k - 1]) + eval(&fits[k])),
        }
    };

    // Boundary polyline: lower boundary left to right, upper right to left.
    let mut lower: Vec<(f64, f64)> = Vec::new();
    let mut upper: Vec<(f64, f64)> = Vec::new();
    for k in 0..=n_int {
        let x = edges[k];
        let y = cm.bottom_at(x);
        lower.push((x, y));
        upper.push((x, y + extent_at_edge(k)));
        if k < n_int {
            for (x, e) in &interior[k] {
                let y = cm.bottom_at(*x);
                lower.push((*x, y));
                upper.push((*x, y + e));
            }
        }
    }
    let mut ring = lower;
    upper.reverse();
    ring.extend(upper);
    ring.dedup_by(|a, b| (a.0 - b.0).hypot(a.1 - b.1) < SNAP_ERROR);
    if let (Some(f), Some(l)) = (ring.first(), ring.last())
        && (f.0 - l.0).hypot(f.1 - l.1) < SNAP_ERROR {
            ring.pop();
        }

    let n = ring.len();
    let mut corners = Vec::new();
    for i in 0..n {
        let (p, q, r) = (ring[(i + n - 1) % n], ring[i], ring[(i + 1) % n]);
        let (ux, uy) = (q.0 - p.0, q.1 - p.1);
        let (vx, vy) = (r.0 - q.0, r.1 - q.1);
        let turn = (ux * vy - uy * vx).atan2(ux * vx + uy * vy);
        if turn < -VERTEX_ANGLE {
            return Err(Error::NonConvex { index: corners.len() });
        }
        if turn > VERTEX_ANGLE {
            corners.push(q);
        }
    }
    Ok(corners)
}

/// Polygon with the corners snapped to small-denominator rationals;
/// twisting indices start at zero.
pub fn extract_polygon(cm: &CartographicMap) -> Result<DecoratedPolygon> {
    let corners = polygon_corners(cm)?;
    let mut unsnapped_points = Vec::new();
    let vertices: Vec<RationalPoint> = corners
        .iter()
        .map(|(x, y)| {
            let (rx, ok_x) = snap(*x);
            let (ry, ok_y) = snap(*y);
            if !(ok_x && ok_y) {
                unsnapped_points.push((rx.clone(), ry.clone()));
            }
            (rx, ry)
        })
        .collect();
    let vertices = canonical_vertices(&vertices);
    let unsnapped = vertices
        .iter()
        .enumerate()
        .filter(|(_, v)| unsnapped_points.contains(v))
        .map(|(i, _)| i)
        .collect();
    let marked = cm
        .marked
        .iter()
        .map(|c| MarkedPoint {
            c: (snap(c.a).0, snap(c.b).0),
            kappa: 0,
        })
        .collect();
    Ok(DecoratedPolygon {
        epsilons: cm.cut.epsilons.clone(),
        vertices,
        marked,
        unsnapped,
    })
}

/// Serialized polygon with exact coordinates written as `"n/d"` strings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolygonJson {
    pub epsilons: Vec<i8>,
    pub vertices: Vec<[String; 2]>,
    pub marked: Vec<MarkedJson>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unsnapped: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarkedJson {
    pub c: [String; 2],
    pub kappa: i64,
}

fn approx(p: &RationalPoint) -> [f64; 2] {
    [p.0.to_f64().unwrap_or(f64::NAN), p.1.to_f64().unwrap_or(f64::NAN)]
}

impl DecoratedPolygon {
    pub fn float_vertices(&self) -> Vec<[f64; 2]> {
        self.vertices.iter().map(approx).collect()
    }

    pub fn float_marked(&self) -> Vec<[f64; 2]> {
        self.marked.iter().map(|m| approx(&m.c)).collect()
    }

    pub fn to_json(&self) -> PolygonJson {
        let pair = |p: &RationalPoint| [format_rational(&p.0), format_rational(&p.1)];
        PolygonJson {
            epsilons: self.epsilons.clone(),
            vertices: self.vertices.iter().map(pair).collect(),
            marked: self
                .marked
                .iter()
                .map(|m| MarkedJson {
                    c: pair(&m.c),
                    kappa: m.kappa,
                })
                .collect(),
            unsnapped: self.unsnapped.clone(),
        }
    }

    /// Parses a polygon; vertices are put in canonical order.
    pub fn from_json(json: &PolygonJson) -> Result<Self> {
        let pair = |p: &[String; 2]| -> Result<RationalPoint> {
            Ok((parse_rational(&p[0])?, parse_rational(&p[1])?))
        };
        if json.epsilons.iter().any(|e| *e != 1 && *e != -1) {
            return Err(Error::Parse("epsilons must be +1 or -1".into()));
        }
        if json.marked.len() != json.epsilons.len() {
            return Err(Error::Parse(format!(
                "{} marked points for {} signs",
                json.marked.len(),
                json.epsilons.len()
            )));
        }
        let vertices: Vec<RationalPoint> = json.vertices.iter().map(pair).collect::<Result<_>>()?;
        let canonical = canonical_vertices(&vertices);
        if json.unsnapped.iter().any(|i| *i >= canonical.len()) {
            return Err(Error::Parse("unsnapped index out of range".into()));
        }
        Ok(Self {
            epsilons: json.epsilons.clone(),
            vertices: canonical,
            marked: json
                .marked
                .iter()
                .map(|m| {
                    Ok(MarkedPoint {
                        c: pair(&m.c)?,
                        kappa: m.kappa,
                    })
                })
                .collect::<Result<_>>()?,
            unsnapped: json.unsnapped.clone(),
        })
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let json: PolygonJson =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_json(&json)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("polygon serializes")
    }
}
