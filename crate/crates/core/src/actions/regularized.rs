use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::k4::TaylorSeries;
use super::period::period_basis_at;
use super::poly::{monomials, Poly};
use crate::error::{Error, Result};
use crate::models::{IntegrableModel, MomentValue, Observable};
use crate::numerics::least_squares;
use crate::singularities::{default_phase_box, find_critical_points, linearization, spectrum};

/// Anything that can report the period lattice `(τ₁ mod 2π, τ₂)` at a
/// regular value.
pub trait PeriodSource: Sync {
    fn periods(&self, c: MomentValue) -> Result<(f64, f64)>;
}

/// Periods of a model computed by shooting.
pub struct ModelPeriods<'a> {
    pub model: &'a IntegrableModel,
    pub tol: f64,
}

impl PeriodSource for ModelPeriods<'_> {
    fn periods(&self, c: MomentValue) -> Result<(f64, f64)> {
        period_basis_at(self.model, c, self.tol).map(|p| p.second)
    }
}

/// Focus-focus normal form with a prescribed smooth part, for testing:
/// second action `Im(w Log w − w)/2π + h(a, b)` in coordinates centred at
/// the origin.
pub struct FlatFocusModel {
    pub h: Poly,
}

impl PeriodSource for FlatFocusModel {
    fn periods(&self, c: MomentValue) -> Result<(f64, f64)> {
        let r = c.a.hypot(c.b);
        let tau2 = -(r.ln() + TAU * self.h.d_b(c.a, c.b));
        let tau1 = -(c.b.atan2(c.a) + TAU * self.h.d_a(c.a, c.b));
        Ok((tau1.rem_euclid(TAU), tau2))
    }
}

/// Linear part of `H − H₀ ≈ κ·q₂ + μ·(J − J₀)` at a focus-focus point,
/// where `q₂` is the hyperbolic normal-form component.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FocusLinearPart {
    pub kappa: f64,
    pub mu: f64,
}

pub fn focus_linear_part(model: &IntegrableModel, c0: MomentValue) -> Result<FocusLinearPart> {
    let points = find_critical_points(model, &default_phase_box(model), 3, 1e-9)?;
    let p = points
        .iter()
        .filter(|cp| cp.wtype.is_focus_focus())
        .map(|cp| cp.point.vector())
        .find(|v| {
            let (a, b) = model.moment(v);
            MomentValue::new(a, b).dist(&c0) < 1e-6
        })
        .ok_or_else(|| Error::Parameter(format!("no focus-focus point over ({}, {})", c0.a, c0.b)))?;
    let lh = linearization(model, Observable::H, &p);
    let lj = linearization(model, Observable::J, &p);
    let top = spectrum(&lh)?
        .into_iter()
        .max_by(|x, y| x.re.total_cmp(&y.re))
        .unwrap();
    let kappa = top.re;
    let mut best = (0.0, f64::INFINITY);
    for mu in [top.im.abs(), -top.im.abs()] {
        let imag = spectrum(&(&lh - &lj * mu))?
            .iter()
            .map(|z| z.im.abs())
            .fold(0.0, f64::max);
        if imag < best.1 {
            best = (mu, imag);
        }
    }
    Ok(FocusLinearPart { kappa, mu: best.0 })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaylorCoefficient {
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularizedAction {
    pub focus_value: MomentValue,
    pub disk_radius: f64,
    pub cut_sign: i8,
    pub degree: usize,
    /// Sign relating `J − J₀` to the normal-form coordinate `a`.
    pub orientation: i8,
    /// Normal-form coordinate `b` as a polynomial in `(J − J₀, H − H₀)`.
    pub normal_coordinate: Vec<TaylorCoefficient>,
    /// Normalized Taylor coefficients of `h` in normal-form coordinates.
    pub taylor: Vec<TaylorCoefficient>,
    /// RMS residual of the fit, in units of the period form.
    pub residual: f64,
    /// Sample points `(a, b)` relative to the focus value with the fitted
    /// `h` there.
    pub samples: Vec<(f64, f64, f64)>,
}

/// Argument of `x + iy` on the branch with the cut along the positive
/// (`eps = 1`) or negative (`eps = −1`) imaginary axis.
pub fn arg_branch(x: f64, y: f64, eps: i8) -> f64 {
    let t = y.atan2(x);
    if eps >= 0 {
        if t > PI / 2.0 { t - TAU } else { t }
    } else if t < -PI / 2.0 {
        t + TAU
    } else {
        t
    }
}

fn wrap_unit(x: f64) -> f64 {
    x - x.round()
}

struct Sample {
    a: f64,
    b: f64,
    /// −τ₁/2π (mod 1) and −τ₂/2π.
    da: f64,
    db: f64,
}

struct Fit {
    nu: Poly,
    h: Poly,
}

fn unpack(degree: usize, x: &[f64]) -> Fit {
    let mons: Vec<(usize, usize)> = monomials(degree).into_iter().skip(1).collect();
    let mut nu = Poly::zero(degree);
    let mut h = Poly::zero(degree);
    for (k, (i, j)) in mons.iter().enumerate() {
        nu.set(*i, *j, x[k]);
        h.set(*i, *j, x[mons.len() + k]);
    }
    Fit { nu, h }
}

fn pack(fit: &Fit) -> Vec<f64> {
    let mons: Vec<(usize, usize)> = monomials(fit.nu.degree).into_iter().skip(1).collect();
    mons.iter()
        .map(|(i, j)| fit.nu.get(*i, *j))
        .chain(mons.iter().map(|(i, j)| fit.h.get(*i, *j)))
        .collect()
}

/// Singular part `(∂_a S, ∂_b S)` in units of the period form.
fn singular_gradient(nu: &Poly, sigma: f64, eps: i8, a: f64, b: f64) -> (f64, f64) {
    let beta = nu.eval(a, b);
    let x = sigma * a;
    let lr = x.hypot(beta).ln();
    let arg = arg_branch(x, beta, eps);
    (
        (sigma * arg + lr * nu.d_a(a, b)) / TAU,
        (lr * nu.d_b(a, b)) / TAU,
    )
}

fn residuals(samples: &[Sample], fit: &Fit, sigma: f64, eps: i8) -> DVector<f64> {
    let mut r = DVector::zeros(2 * samples.len());
    for (k, s) in samples.iter().enumerate() {
        let (sa, sb) = singular_gradient(&fit.nu, sigma, eps, s.a, s.b);
        r[2 * k] = wrap_unit(sa + fit.h.d_a(s.a, s.b) - s.da);
        r[2 * k + 1] = sb + fit.h.d_b(s.a, s.b) - s.db;
    }
    r
}

/// Best smooth part for a fixed normal coordinate (linear least squares).
fn solve_h(samples: &[Sample], nu: &Poly, sigma: f64, eps: i8, degree: usize) -> Option<Poly> {
    let mons: Vec<(usize, usize)> = monomials(degree).into_iter().skip(1).collect();
    let n = samples.len();
    let mut m = DMatrix::zeros(2 * n, mons.len());
    let mut rhs = DVector::zeros(2 * n);
    let mut reference: Option<f64> = None;
    for (k, s) in samples.iter().enumerate() {
        let (sa, sb) = singular_gradient(nu, sigma, eps, s.a, s.b);
        let mut ta = s.da - sa;
        let r = *reference.get_or_insert(ta);
        ta -= (ta - r).round();
        rhs[2 * k] = ta;
        rhs[2 * k + 1] = s.db - sb;
        for (c, (i, j)) in mons.iter().enumerate() {
            let mut e = Poly::zero(degree);
            e.set(*i, *j, 1.0);
            m[(2 * k, c)] = e.d_a(s.a, s.b);
            m[(2 * k + 1, c)] = e.d_b(s.a, s.b);
        }
    }
    let (x, _) = least_squares(&m, &rhs)?;
    let mut h = Poly::zero(degree);
    for (c, (i, j)) in mons.iter().enumerate() {
        h.set(*i, *j, x[c]);
    }
    Some(h)
}

fn levenberg_marquardt(samples: &[Sample], start: Fit, sigma: f64, eps: i8) -> (Fit, f64) {
    let degree = start.nu.degree;
    let mut x = pack(&start);
    let eval = |x: &[f64]| residuals(samples, &unpack(degree, x), sigma, eps);
    let mut r = eval(&x);
    let mut cost = r.norm_squared();
    let mut lambda = 1e-6;
    for _ in 0..200 {
        let n = x.len();
        let mut jac = DMatrix::zeros(r.len(), n);
        for k in 0..n {
            let h = 1e-7 * x[k].abs().max(1e-3);
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[k] += h;
            xm[k] -= h;
            jac.set_column(k, &((eval(&xp) - eval(&xm)) / (2.0 * h)));
        }
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * &r;
        let mut improved = false;
        for _ in 0..12 {
            let mut a = jtj.clone();
            for i in 0..n {
                a[(i, i)] += lambda * jtj[(i, i)].max(1e-12);
            }
            let Some(step) = a.lu().solve(&(-&g)) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let rt = eval(&trial);
            let ct = rt.norm_squared();
            if ct.is_finite() && ct < cost {
                let rel = (cost - ct) / cost.max(1e-300);
                x = trial;
                r = rt;
                cost = ct;
                lambda = (lambda * 0.2).max(1e-12);
                improved = true;
                if rel < 1e-12 {
                    return (unpack(degree, &x), (cost / r.len() as f64).sqrt());
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    (unpack(degree, &x), (cost / r.len() as f64).sqrt())
}

/// Regularized action at a focus value from an arbitrary period source.
pub fn regularized_action_from(
    source: &dyn PeriodSource,
    c0: MomentValue,
    radius: f64,
    cut_sign: i8,
    degree: usize,
    linear: FocusLinearPart,
) -> Result<RegularizedAction> {
    if radius <= 0.0 || degree == 0 {
        return Err(Error::Parameter("radius and degree must be positive".into()));
    }
    let eps = if cut_sign >= 0 { 1 } else { -1 };
    let cut_angle = eps as f64 * PI / 2.0;
    let rings = [1.0, 0.8, 0.5, 0.4, 0.25, 0.2];
    let angles = 36;
    let mut points = Vec::new();
    for f in rings {
        let rho = f * radius;
        for k in 0..angles {
            let t = -PI + TAU * (k as f64 + 0.5) / angles as f64;
            let mut d = (t - cut_angle).rem_euclid(TAU);
            if d > PI {
                d = TAU - d;
            }
            if d < 0.1 {
                continue;
            }
            points.push((rho * t.cos(), rho * t.sin()));
        }
    }
    let samples: Vec<Sample> = points
        .par_iter()
        .map(|(a, b)| {
            let (t1, t2) = source.periods(MomentValue::new(c0.a + a, c0.b + b))?;
            Ok(Sample {
                a: *a,
                b: *b,
                da: wrap_unit(-t1 / TAU),
                db: -t2 / TAU,
            })
        })
        .collect::<Result<_>>()?;

    let mut best: Option<(Fit, f64, f64)> = None;
    for sigma in [1.0, -1.0] {
        let mut nu = Poly::zero(degree);
        nu.set(0, 1, 1.0 / linear.kappa);
        nu.set(1, 0, -linear.mu / linear.kappa);
        let Some(h) = solve_h(&samples, &nu, sigma, eps, degree) else {
            continue;
        };
        let (fit, rms) = levenberg_marquardt(&samples, Fit { nu, h }, sigma, eps);
        // Both orientations fit equally well: they differ by the reflection
        // a ↦ −a plus a half-integer shift, so σ = +1 is kept when usable.
        if fit.nu.get(0, 1) > 0.0 && rms <= 1e-3 {
            best = Some((fit, rms, sigma));
            break;
        }
        if best.as_ref().is_none_or(|(_, r, _)| rms < *r) {
            best = Some((fit, rms, sigma));
        }
    }
    let (fit, rms, sigma) = best.ok_or(Error::ResolutionInsufficient {
        residual: f64::INFINITY,
    })?;
    if rms > 1e-3 {
        return Err(Error::ResolutionInsufficient { residual: rms });
    }

    // Re-express h in normal-form coordinates (σ·a, ν) and normalize.
    let mut x = Poly::zero(degree);
    x.set(1, 0, sigma);
    let mut beta = Poly::zero(degree);
    beta.set(0, 1, 1.0);
    let b_of = fit.nu.invert_in_b().compose(&x, &beta);
    let mut hn = fit.h.compose(&x, &b_of);
    hn.set(0, 0, 0.0);
    hn.set(1, 0, hn.get(1, 0).rem_euclid(1.0));
    let taylor = monomials(degree)
        .into_iter()
        .skip(1)
        .map(|(i, j)| TaylorCoefficient {
            i,
            j,
            value: hn.get(i, j),
        })
        .collect();
    let normal_coordinate = monomials(degree)
        .into_iter()
        .skip(1)
        .map(|(i, j)| TaylorCoefficient {
            i,
            j,
            value: fit.nu.get(i, j),
        })
        .collect();
    let samples = samples
        .iter()
        .map(|s| (s.a, s.b, fit.h.eval(s.a, s.b)))
        .collect();
    Ok(RegularizedAction {
        focus_value: c0,
        disk_radius: radius,
        cut_sign: eps,
        degree,
        orientation: sigma as i8,
        normal_coordinate,
        taylor,
        residual: rms,
        samples,
    })
}

/// Regularized action of a model at the focus value `c0`.
pub fn regularized_action(
    model: &IntegrableModel,
    c0: MomentValue,
    radius: f64,
    cut_sign: i8,
    degree: usize,
) -> Result<RegularizedAction> {
    let linear = focus_linear_part(model, c0)?;
    let source = ModelPeriods { model, tol: 1e-10 };
    regularized_action_from(&source, c0, radius, cut_sign, degree, linear)
}

impl RegularizedAction {
    pub fn coefficient(&self, i: usize, j: usize) -> f64 {
        self.taylor
            .iter()
            .find(|c| c.i == i && c.j == j)
            .map(|c| c.value)
            .unwrap_or(0.0)
    }

    /// Residual of the fitted model against fresh period data at `c`, for
    /// checking the fit away from the sample set (e.g. inside the excluded
    /// sector around the cut).
    pub fn check_at(&self, source: &dyn PeriodSource, c: MomentValue) -> Result<f64> {
        let mut nu = Poly::zero(self.degree);
        for t in &self.normal_coordinate {
            nu.set(t.i, t.j, t.value);
        }
        let (t1, t2) = source.periods(c)?;
        let (a, b) = (c.a - self.focus_value.a, c.b - self.focus_value.b);
        let sigma = self.orientation as f64;
        let (sa, sb) = singular_gradient(&nu, sigma, self.cut_sign, a, b);
        // Gradient of h in the original coordinates from the normalized
        // series: h(a,b) = hn(σa, ν(a,b)).
        let mut hn = Poly::zero(self.degree);
        for t in &self.taylor {
            hn.set(t.i, t.j, t.value);
        }
        let (x, beta) = (sigma * a, nu.eval(a, b));
        let ha = sigma * hn.d_a(x, beta) + hn.d_b(x, beta) * nu.d_a(a, b);
        let hb = hn.d_b(x, beta) * nu.d_b(a, b);
        let ra = wrap_unit(sa + ha + t1 / TAU);
        let rb = sb + hb + t2 / TAU;
        Ok(ra.hypot(rb))
    }
}

/// Normalized Taylor series of the regularized action.
pub fn taylor_invariant(ra: &RegularizedAction) -> TaylorSeries {
    let mut s = TaylorSeries::zero(ra.degree);
    for c in &ra.taylor {
        s.set_f64(c.i, c.j, c.value);
    }
    s.normalized()
}
