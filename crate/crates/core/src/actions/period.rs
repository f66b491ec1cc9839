use std::f64::consts::TAU;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{ChartPoint, Halton, IntegrableModel, MomentValue, Observable, PhaseBound};
use crate::numerics::manifold_lm;
use crate::ode::Dopri5;

/// Default cap on the return time.
pub const TIME_CAP: f64 = 1e4;

/// Basis of the period lattice at a regular value. A pair `(τ₁, τ₂)` is a
/// period when the J-flow for `τ₁` composed with the H-flow for `τ₂` is the
/// identity on the fiber.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodBasis {
    pub at: MomentValue,
    pub first: (f64, f64),
    pub second: (f64, f64),
    /// Number of whole turns of the J-action removed from `τ₁`.
    pub branch_tag: i64,
}

impl PeriodBasis {
    pub fn tau1(&self) -> f64 {
        self.second.0
    }

    pub fn tau2(&self) -> f64 {
        self.second.1
    }
}

fn reduced_velocity(model: &IntegrableModel, p: &DVector<f64>) -> Option<DVector<f64>> {
    let h = 1e-6;
    let x = model.vector_field(Observable::H, p);
    let plus = model.reduced(&(p + &x * h))?;
    let minus = model.reduced(&(p - &x * h))?;
    Some((plus - minus) / (2.0 * h))
}

/// A point on the fiber over `c`, refined from the closest of a fixed set
/// of phase-space samples. Among converged candidates the one moving
/// fastest in the orbit space is kept, which keeps Poincaré sections
/// transverse.
pub fn fiber_seed(model: &IntegrableModel, c: MomentValue) -> Result<ChartPoint> {
    fiber_seed_raw(model, c).map(|p| model.point_from(&p))
}

pub(crate) fn fiber_seed_raw(model: &IntegrableModel, c: MomentValue) -> Result<DVector<f64>> {
    thread_local! {
        static CACHE: std::cell::RefCell<Option<(String, Vec<(MomentValue, DVector<f64>)>)>> =
            const { std::cell::RefCell::new(None) };
    }
    let samples = CACHE.with(|cell| {
        let mut slot = cell.borrow_mut();
        if slot.as_ref().map(|(id, _)| id != &model.id()).unwrap_or(true) {
            let mut halton = Halton::new(model.sample_dim());
            let bound = PhaseBound { radius: 2.5 };
            let pts = (0..6000)
                .map(|_| {
                    let p = model.sample(&halton.next_point(), &bound);
                    let (a, b) = model.moment(&p);
                    (MomentValue::new(a, b), p)
                })
                .collect();
            *slot = Some((model.id(), pts));
        }
        let (_, pts) = slot.as_ref().unwrap();
        let mut near: Vec<&(MomentValue, DVector<f64>)> = pts.iter().collect();
        near.sort_by(|x, y| x.0.dist(&c).total_cmp(&y.0.dist(&c)));
        near.into_iter().take(12).map(|s| s.1.clone()).collect::<Vec<_>>()
    });
    let residual = |p: &DVector<f64>, _: &DVector<f64>| {
        let (a, b) = model.moment(p);
        DVector::from_vec(vec![a - c.a, b - c.b])
    };
    let mut best: Option<(f64, DVector<f64>)> = None;
    for s in samples {
        let Some(sol) = manifold_lm(model, &s, &DVector::zeros(0), residual, 1e-14, 60) else {
            continue;
        };
        if sol.residual > 1e-11 {
            continue;
        }
        let speed = reduced_velocity(model, &sol.point)
            .map(|v| v.norm())
            .unwrap_or_else(|| model.vector_field(Observable::H, &sol.point).norm());
        if best.as_ref().is_none_or(|(s, _)| speed > *s) {
            best = Some((speed, sol.point));
        }
    }
    best.map(|(_, p)| p).ok_or(Error::NoFiberPoint { a: c.a, b: c.b })
}

/// Angle `s` with `rot(s, p) = q`, found by a coarse scan followed by
/// golden-section refinement.
fn rotation_angle(model: &IntegrableModel, p: &DVector<f64>, q: &DVector<f64>) -> Option<f64> {
    let dist = |s: f64| model.j_rotation(s, p).map(|r| (r - q).norm());
    let n = 720;
    let mut best = (0.0, f64::INFINITY);
    for i in 0..n {
        let s = -std::f64::consts::PI + TAU * i as f64 / n as f64;
        let d = dist(s)?;
        if d < best.1 {
            best = (s, d);
        }
    }
    let step = TAU / n as f64;
    let (mut lo, mut hi) = (best.0 - step, best.0 + step);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (dist(x1)?, dist(x2)?);
    while hi - lo > 1e-13 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = dist(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = dist(x2)?;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Period lattice at `c` by shooting from `seed`.
pub fn period_basis(
    model: &IntegrableModel,
    c: MomentValue,
    seed: &ChartPoint,
    tol: f64,
) -> Result<PeriodBasis> {
    let p0 = model.check_point(seed)?;
    let (a, b) = model.moment(&p0);
    if (a - c.a).abs() > 1e-8 || (b - c.b).abs() > 1e-8 {
        return Err(Error::Parameter(format!(
            "seed lies over ({a}, {b}), not over ({}, {})",
            c.a, c.b
        )));
    }
    period_basis_raw(model, c, &p0, tol, TIME_CAP)
}

pub(crate) fn period_basis_raw(
    model: &IntegrableModel,
    c: MomentValue,
    p0: &DVector<f64>,
    tol: f64,
    cap: f64,
) -> Result<PeriodBasis> {
    if !model.has_circle_action() {
        return Err(Error::Parameter(format!(
            "{} has no global circle action",
            model.name()
        )));
    }
    let not_compact = || Error::NonCompactFiber { cap };
    let r0 = model.reduced(p0).ok_or_else(not_compact)?;
    let v0 = reduced_velocity(model, p0).ok_or_else(not_compact)?;
    if v0.norm() < 1e-12 {
        return Err(Error::Parameter("seed is a relative equilibrium".into()));
    }
    let section = |y: &DVector<f64>| (model.reduced(y).unwrap() - &r0).dot(&v0);
    let distance = |y: &DVector<f64>| (model.reduced(y).unwrap() - &r0).norm();

    let rhs = |y: &DVector<f64>| model.vector_field(Observable::H, y);
    let project = |y: &mut DVector<f64>| model.project(y);
    let solver = Dopri5::new(&rhs, tol * 1e-2).with_projection(&project);

    let mut prev_t = 0.0;
    let mut prev_y = p0.clone();
    let mut prev_s = 0.0;
    let mut d_max: f64 = 0.0;
    let mut hit: Option<(f64, DVector<f64>, f64)> = None;
    solver.run(p0, cap, |acc| {
        let s = section(&acc.y);
        let d = distance(&acc.y);
        d_max = d_max.max(d);
        if prev_s < 0.0 && s >= 0.0 && d < 0.5 * d_max {
            hit = Some((prev_t, prev_y.clone(), acc.t - prev_t));
            return false;
        }
        prev_t = acc.t;
        prev_y = acc.y.clone();
        prev_s = s;
        true
    })?;
    let (t0, y0, h) = hit.ok_or_else(not_compact)?;
    // Bisection for the crossing time inside the last accepted step.
    let (mut lo, mut hi) = (0.0, h);
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if section(&solver.plain_step(&y0, mid)) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let dt = 0.5 * (lo + hi);
    let tau2 = t0 + dt;
    let p_star = solver.plain_step(&y0, dt);
    let s = rotation_angle(model, p0, &p_star).ok_or_else(not_compact)?;
    let raw = -s;
    let branch_tag = raw.div_euclid(TAU) as i64;
    let tau1 = raw.rem_euclid(TAU);
    Ok(PeriodBasis {
        at: c,
        first: (TAU, 0.0),
        second: (if tau1 >= TAU { 0.0 } else { tau1 }, tau2),
        branch_tag,
    })
}

/// Period basis at `c` from an automatically chosen seed.
pub fn period_basis_at(model: &IntegrableModel, c: MomentValue, tol: f64) -> Result<PeriodBasis> {
    let p0 = fiber_seed_raw(model, c)?;
    period_basis_raw(model, c, &p0, tol, TIME_CAP)
}
