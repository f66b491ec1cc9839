use std::cmp::Ordering;

use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

/// Error bound for the floating-point orientation determinant, in units of
/// the sum of the absolute products.
const ORIENT_BOUND: f64 = 3.330_669_073_875_471_6e-16;

fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite coordinate")
}

/// Sign of the orientation of `(a, b, c)`: positive for a left turn. Falls
/// back to rational arithmetic when the floating-point value is not
/// certified.
pub fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> Ordering {
    let l = (b[0] - a[0]) * (c[1] - a[1]);
    let r = (b[1] - a[1]) * (c[0] - a[0]);
    let det = l - r;
    if det.abs() > ORIENT_BOUND * (l.abs() + r.abs()) {
        return det.partial_cmp(&0.0).unwrap();
    }
    let [ax, ay] = a.map(exact);
    let [bx, by] = b.map(exact);
    let [cx, cy] = c.map(exact);
    let d = (bx - &ax) * (cy - &ay) - (by - ay) * (cx - ax);
    d.cmp(&BigRational::zero())
}

/// Convex hull as a counter-clockwise vertex list without collinear
/// vertices. Degenerate hulls have one or two vertices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexHull2D {
    pub vertices: Vec<[f64; 2]>,
}

/// Andrew's monotone chain with exact orientation tests.
pub fn convex_hull(points: &[[f64; 2]]) -> ConvexHull2D {
    let mut pts: Vec<[f64; 2]> = points
        .iter()
        .copied()
        .filter(|p| p[0].is_finite() && p[1].is_finite())
        .collect();
    pts.sort_by(|p, q| p[0].total_cmp(&q[0]).then(p[1].total_cmp(&q[1])));
    pts.dedup();
    if pts.len() <= 2 {
        return ConvexHull2D { vertices: pts };
    }
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for p in iter {
            while hull.len() >= start + 2
                && orient(hull[hull.len() - 2], hull[hull.len() - 1], *p) != Ordering::Greater
            {
                hull.pop();
            }
            hull.push(*p);
        }
        hull.pop();
    }
    if hull.len() == 2 && hull[0] == hull[1] {
        hull.pop();
    }
    ConvexHull2D { vertices: hull }
}

fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p[0] - a[0] - t * d[0]).hypot(p[1] - a[1] - t * d[1])
}

impl ConvexHull2D {
    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        let v = &self.vertices;
        match v.len() {
            0 => false,
            1 => v[0] == p,
            2 => orient(v[0], v[1], p) == Ordering::Equal && segment_distance(p, v[0], v[1]) == 0.0,
            n => (0..n).all(|i| orient(v[i], v[(i + 1) % n], p) != Ordering::Less),
        }
    }

    /// Euclidean distance from `p` to the hull as a filled region.
    pub fn distance(&self, p: [f64; 2]) -> f64 {
        let v = &self.vertices;
        match v.len() {
            0 => f64::INFINITY,
            1 => (p[0] - v[0][0]).hypot(p[1] - v[0][1]),
            2 => segment_distance(p, v[0], v[1]),
            n => {
                if self.contains(p) {
                    return 0.0;
                }
                (0..n)
                    .map(|i| segment_distance(p, v[i], v[(i + 1) % n]))
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }

    pub fn area(&self) -> f64 {
        let v = &self.vertices;
        let n = v.len();
        if n < 3 {
            return 0.0;
        }
        0.5 * (0..n)
            .map(|i| {
                let (p, q) = (v[i], v[(i + 1) % n]);
                p[0] * q[1] - p[1] * q[0]
            })
            .sum::<f64>()
    }
}

/// Hausdorff distance between two filled convex hulls: the larger of the two
/// directed vertex-to-region distances.
pub fn hausdorff_distance(a: &ConvexHull2D, b: &ConvexHull2D) -> f64 {
    let directed = |x: &ConvexHull2D, y: &ConvexHull2D| {
        x.vertices
            .iter()
            .map(|p| y.distance(*p))
            .fold(0.0, f64::max)
    };
    directed(a, b).max(directed(b, a))
}
