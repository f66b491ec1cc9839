use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::hull::{convex_hull, ConvexHull2D};
use crate::cartography::{j_range, Levels};
use crate::error::{Error, Result};
use crate::models::{Halton, IntegrableModel, PhaseBound, System};
use crate::singularities::BaseBox;

/// `F(M)` over a window: boundary curves of the image on a grid of
/// J-values together with a quasi-random sample of the interior.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalImage {
    pub window: BaseBox,
    /// Closed range of J over M; infinite ends are unbounded.
    pub j_range: (f64, f64),
    pub xs: Vec<f64>,
    pub lower: Vec<f64>,
    /// `None` when H is unbounded above on the level.
    pub upper: Vec<Option<f64>>,
    /// Hull of `F(M) ∩ window`.
    pub hull: ConvexHull2D,
    pub samples: usize,
}

fn sample_bound(model: &IntegrableModel, window: &BaseBox) -> PhaseBound {
    match model.system() {
        System::SphericalPendulum => PhaseBound {
            radius: (2.0 * (window.b_hi + 1.0)).max(0.0).sqrt() * 1.01,
        },
        System::SpinOscillator => PhaseBound {
            radius: (2.0 * (window.a_hi + 1.0)).max(0.0).sqrt() * 1.01,
        },
        _ => PhaseBound::default(),
    }
}

/// Images of `samples` Halton points of phase space that land in the window.
pub(crate) fn window_samples(model: &IntegrableModel, window: &BaseBox, samples: usize) -> Vec<[f64; 2]> {
    let bound = sample_bound(model, window);
    let mut halton = Halton::new(model.sample_dim());
    let mut points = Vec::new();
    for _ in 0..samples {
        let p = model.sample(&halton.next_point(), &bound);
        let (a, b) = model.moment(&p);
        if a >= window.a_lo && a <= window.a_hi && b >= window.b_lo && b <= window.b_hi {
            points.push([a, b]);
        }
    }
    points
}

/// Samples the boundary of `F(M)` on `columns` J-lines across the window
/// and maps `samples` Halton points of phase space through F.
pub fn classical_image(
    model: &IntegrableModel,
    window: &BaseBox,
    columns: usize,
    samples: usize,
) -> Result<ClassicalImage> {
    if !(window.a_lo <= window.a_hi && window.b_lo <= window.b_hi) || columns < 2 {
        return Err(Error::Parameter("empty window or fewer than two columns".into()));
    }
    let (jlo, jhi) = j_range(model)?;
    let lo = window.a_lo.max(jlo);
    let hi = window.a_hi.min(jhi);
    let (mut xs, mut lower, mut upper) = (Vec::new(), Vec::new(), Vec::new());
    if lo <= hi {
        let levels = Levels::new(model);
        let grid: Vec<f64> = if hi > lo {
            (0..columns)
                .map(|i| lo + (hi - lo) * i as f64 / (columns - 1) as f64)
                .collect()
        } else {
            vec![lo]
        };
        let rows: Vec<(f64, f64, Option<f64>)> = grid
            .par_iter()
            .map(|x| {
                // The extreme levels of J are single points; solve just inside.
                let inset = 1e-9 * (1.0 + x.abs());
                let xe = if *x == jlo {
                    x + inset
                } else if *x == jhi {
                    x - inset
                } else {
                    *x
                };
                let (h0, _) = levels.min(xe)?;
                let h1 = levels.max(xe)?;
                Ok((*x, h0, h1))
            })
            .collect::<Result<_>>()?;
        for (x, h0, h1) in rows {
            xs.push(x);
            lower.push(h0);
            upper.push(h1);
        }
    }
    let mut image = ClassicalImage {
        window: *window,
        j_range: (jlo, jhi),
        xs,
        lower,
        upper,
        hull: convex_hull(&[]),
        samples,
    };
    let mut points = image.boundary_points();
    points.extend(window_samples(model, window, samples));
    image.hull = convex_hull(&points);
    Ok(image)
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

impl ClassicalImage {
    /// Boundary points of `F(M) ∩ window` on the sampled columns.
    pub fn boundary_points(&self) -> Vec<[f64; 2]> {
        let w = &self.window;
        let mut out = Vec::new();
        for (k, &x) in self.xs.iter().enumerate() {
            let top = self.upper[k].unwrap_or(f64::INFINITY).min(w.b_hi);
            let bottom = self.lower[k].max(w.b_lo);
            if bottom <= top {
                out.push([x, bottom]);
                out.push([x, top]);
            }
        }
        out
    }

    fn bounds_at(&self, x: f64) -> Option<(f64, f64)> {
        let n = self.xs.len();
        if n == 0 || x < self.xs[0] || x > self.xs[n - 1] {
            return None;
        }
        if n == 1 {
            return Some((self.lower[0], self.upper[0].unwrap_or(f64::INFINITY)));
        }
        let k = self.xs.partition_point(|v| *v <= x).clamp(1, n - 1);
        let t = (x - self.xs[k - 1]) / (self.xs[k] - self.xs[k - 1]);
        let lerp = |a: f64, b: f64| a + t * (b - a);
        let lo = lerp(self.lower[k - 1], self.lower[k]);
        let hi = match (self.upper[k - 1], self.upper[k]) {
            (Some(a), Some(b)) => lerp(a, b),
            _ => f64::INFINITY,
        };
        Some((lo, hi))
    }

    /// Distance from `p` to `F(M)`, resolved within the sampled columns.
    pub fn distance(&self, p: [f64; 2]) -> f64 {
        if let Some((lo, hi)) = self.bounds_at(p[0])
            && p[1] >= lo && p[1] <= hi {
                return 0.0;
            }
        let n = self.xs.len();
        if n == 0 {
            return f64::INFINITY;
        }
        let mut best = f64::INFINITY;
        for k in 1..n {
            let (x0, x1) = (self.xs[k - 1], self.xs[k]);
            best = best.min(segment_distance(p, [x0, self.lower[k - 1]], [x1, self.lower[k]]));
            if let (Some(a), Some(b)) = (self.upper[k - 1], self.upper[k]) {
                best = best.min(segment_distance(p, [x0, a], [x1, b]));
            }
        }
        for k in [0, n - 1] {
            let top = self.upper[k].unwrap_or(f64::INFINITY);
            let ends = [self.j_range.0, self.j_range.1];
            if ends.contains(&self.xs[k]) {
                let y = p[1].clamp(self.lower[k], top);
                best = best.min((p[0] - self.xs[k]).hypot(p[1] - y));
            }
        }
        best
    }
}
