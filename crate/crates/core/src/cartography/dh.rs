use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::map::{extent_at, rank_zero_values, Levels};
use crate::error::{Error, Result};
use crate::models::{IntegrableModel, MomentValue, PhaseBound, System};

/// Monte Carlo estimate of the density over one bin of J.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McBin {
    pub lo: f64,
    pub hi: f64,
    pub estimate: f64,
    pub std_err: f64,
    /// Bin average of the piecewise-linear function.
    pub expected: f64,
}

/// Duistermaat–Heckman function: the vertical extent of the polygon, i.e.
/// the reduced symplectic area over `J = x` divided by 2π.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DhFunction {
    /// Segment ends: the range ends and the critical J-values inside.
    pub breakpoints: Vec<f64>,
    pub slopes: Vec<f64>,
    pub intercepts: Vec<f64>,
    /// Sample abscissae and values from the period quadrature.
    pub xs: Vec<f64>,
    pub values: Vec<f64>,
    /// Largest deviation of a sample from its segment's line, over samples
    /// away from the breakpoints.
    pub fit_residual: f64,
    /// Slope change at each interior breakpoint.
    pub slope_changes: Vec<(f64, f64)>,
    pub monte_carlo: Vec<McBin>,
    /// Every bin agrees within three standard errors.
    pub consistent: bool,
    pub warnings: Vec<String>,
}

impl DhFunction {
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.slopes.len();
        let k = (0..n)
            .find(|&k| x <= self.breakpoints[k + 1])
            .unwrap_or(n - 1);
        (self.slopes[k] * x + self.intercepts[k]).max(0.0)
    }

    /// Exact average of the piecewise-linear function over `[lo, hi]`.
    pub fn average(&self, lo: f64, hi: f64) -> f64 {
        let mut cuts = vec![lo, hi];
        cuts.extend(self.breakpoints.iter().copied().filter(|b| *b > lo && *b < hi));
        cuts.sort_by(f64::total_cmp);
        let total: f64 = cuts
            .windows(2)
            .map(|w| (w[1] - w[0]) * self.eval(0.5 * (w[0] + w[1])))
            .sum();
        total / (hi - lo)
    }
}

/// Sampling bound covering `J ≤ x_hi` for the non-compact models.
fn mc_bound(model: &IntegrableModel, x_hi: f64) -> PhaseBound {
    match model.system() {
        System::SpinOscillator => PhaseBound {
            radius: (2.0 * (x_hi + 1.0)).max(0.0).sqrt() * 1.01 + 1e-3,
        },
        _ => PhaseBound::default(),
    }
}

pub fn duistermaat_heckman(
    model: &IntegrableModel,
    x_range: (f64, f64),
    resolution: usize,
    mc_samples: usize,
) -> Result<DhFunction> {
    duistermaat_heckman_seeded(model, x_range, resolution, mc_samples, 42)
}

pub fn duistermaat_heckman_seeded(
    model: &IntegrableModel,
    x_range: (f64, f64),
    resolution: usize,
    mc_samples: usize,
    seed: u64,
) -> Result<DhFunction> {
    if !model.has_circle_action() || !model.j_is_proper() {
        return Err(Error::Parameter(format!(
            "{} has no proper circle action",
            model.name()
        )));
    }
    let (x_lo, x_hi) = x_range;
    if x_hi <= x_lo || resolution < 2 {
        return Err(Error::Parameter("empty DH range or resolution below 2".into()));
    }
    let crit = rank_zero_values(model)?;
    let foci: Vec<MomentValue> = crit.iter().filter(|(_, f)| *f).map(|(c, _)| *c).collect();
    let mut cx: Vec<f64> = crit.iter().map(|(c, _)| c.a).collect();
    cx.sort_by(f64::total_cmp);
    cx.dedup_by(|a, b| (*a - *b).abs() < 1e-7);
    let (j_min, j_max) = (cx.first().copied(), cx.last().copied());
    if j_min.is_some_and(|m| x_lo < m - 1e-9)
        || (model.is_compact() && j_max.is_some_and(|m| x_hi > m + 1e-9))
    {
        return Err(Error::Parameter(format!(
            "range [{x_lo}, {x_hi}] leaves the image of J"
        )));
    }
    let mut edges = vec![x_lo];
    edges.extend(cx.iter().copied().filter(|x| *x > x_lo + 1e-9 && *x < x_hi - 1e-9));
    edges.push(x_hi);

    let levels = Levels::new(model);
    let dx = (x_hi - x_lo) / resolution as f64;
    let xs: Vec<f64> = (0..resolution)
        .map(|i| x_lo + dx * (i as f64 + 0.5))
        .collect();
    let mut values = Vec::with_capacity(xs.len());
    for x in &xs {
        let (_, _, e) = extent_at(&levels, *x, &foci, 2.0 * dx)?
            .ok_or_else(|| Error::Parameter("H is unbounded on a level of J".into()))?;
        values.push(e);
    }

    let mut slopes = Vec::new();
    let mut intercepts = Vec::new();
    let mut fit_residual: f64 = 0.0;
    let mut warnings = Vec::new();
    for k in 0..edges.len() - 1 {
        let (lo, hi) = (edges[k], edges[k + 1]);
        let margin = 0.1 * (hi - lo);
        let pts: Vec<(f64, f64)> = xs
            .iter()
            .zip(&values)
            .filter(|(x, _)| **x > lo + margin && **x < hi - margin)
            .map(|(x, v)| (*x, *v))
            .collect();
        if pts.len() < 2 {
            return Err(Error::Parameter(format!(
                "resolution too low for the segment [{lo}, {hi}]"
            )));
        }
        let m = pts.len() as f64;
        let (sx, sy) = pts.iter().fold((0.0, 0.0), |s, p| (s.0 + p.0, s.1 + p.1));
        let (mx, my) = (sx / m, sy / m);
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let slope = sxy / sxx;
        let icpt = my - slope * mx;
        for (x, v) in &pts {
            fit_residual = fit_residual.max((slope * x + icpt - v).abs());
        }
        slopes.push(slope);
        intercepts.push(icpt);
    }
    let slope_changes = (1..slopes.len())
        .map(|k| (edges[k], slopes[k] - slopes[k - 1]))
        .collect();

    let mut dh = DhFunction {
        breakpoints: edges,
        slopes,
        intercepts,
        xs,
        values,
        fit_residual,
        slope_changes,
        monte_carlo: Vec::new(),
        consistent: true,
        warnings: Vec::new(),
    };

    if mc_samples > 0 {
        let bound = mc_bound(model, x_hi);
        let volume = model.sample_volume(&bound);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut counts = vec![0usize; resolution];
        let dim = model.sample_dim();
        let mut u = vec![0.0; dim];
        for _ in 0..mc_samples {
            for v in u.iter_mut() {
                *v = rng.random::<f64>();
            }
            let p = model.sample(&u, &bound);
            let (j, _) = model.moment(&p);
            if j >= x_lo && j < x_hi {
                let k = (((j - x_lo) / dx) as usize).min(resolution - 1);
                counts[k] += 1;
            }
        }
        let scale = volume / (TAU * TAU * dx);
        for (k, c) in counts.iter().enumerate() {
            let p = *c as f64 / mc_samples as f64;
            let lo = x_lo + dx * k as f64;
            let bin = McBin {
                lo,
                hi: lo + dx,
                estimate: p * scale,
                std_err: (p * (1.0 - p) / mc_samples as f64).sqrt() * scale,
                expected: dh.average(lo, lo + dx),
            };
            if (bin.estimate - bin.expected).abs() > 3.0 * bin.std_err.max(1e-12) {
                dh.consistent = false;
                warnings.push(format!(
                    "bin [{:.4}, {:.4}]: Monte Carlo {:.5} ± {:.5} vs {:.5}",
                    bin.lo, bin.hi, bin.estimate, bin.std_err, bin.expected
                ));
            }
            dh.monte_carlo.push(bin);
        }
    }
    dh.warnings = warnings;
    Ok(dh)
}
