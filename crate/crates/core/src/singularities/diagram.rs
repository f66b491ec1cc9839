use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{CriticalPoint, PhaseBox, WilliamsonType, classify_with, find_critical_points};
use crate::error::Result;
use crate::models::{
    ChartPoint, Halton, IntegrableModel, MomentValue, Observable, PhaseBound, System, flow_raw,
};
use crate::numerics::manifold_lm;

/// Axis-aligned box in the base `(a, b) = (J, H)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaseBox {
    pub a_lo: f64,
    pub a_hi: f64,
    pub b_lo: f64,
    pub b_hi: f64,
}

impl BaseBox {
    pub fn contains(&self, c: &MomentValue) -> bool {
        c.a >= self.a_lo && c.a <= self.a_hi && c.b >= self.b_lo && c.b <= self.b_hi
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Extremum {
    Min,
    Max,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    Lower,
    Upper,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalValue {
    pub value: MomentValue,
    pub wtype: WilliamsonType,
    pub nondegenerate: bool,
    pub point: ChartPoint,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankOneCurve {
    pub branch: Branch,
    pub samples: Vec<(MomentValue, WilliamsonType)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BifurcationDiagram {
    pub critical_values: Vec<CriticalValue>,
    pub curves: Vec<RankOneCurve>,
    /// Focus-focus values sorted by first coordinate.
    pub focus_values: Vec<MomentValue>,
    pub m_ff: usize,
}

impl BifurcationDiagram {
    pub fn elliptic_elliptic_values(&self) -> Vec<MomentValue> {
        self.critical_values
            .iter()
            .filter(|c| c.wtype == WilliamsonType::new(0, 2, 0, 0))
            .map(|c| c.value)
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
    NotChecked,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemitoricReport {
    pub s1_nondegenerate: Verdict,
    pub s2_circle_action: Verdict,
    pub s3_simple: Verdict,
    pub j_proper: Verdict,
}

pub fn default_phase_box(model: &IntegrableModel) -> PhaseBox {
    let d = model.dim();
    let (lo, hi) = match model.system() {
        System::SphericalPendulum => (
            vec![-1.2, -1.2, -1.2, -1.0, -1.0, -1.0],
            vec![1.2, 1.2, 1.2, 1.0, 1.0, 1.0],
        ),
        System::CoupledAngularMomenta { a, b, .. } => {
            (vec![-a, -a, -a, -b, -b, -b], vec![*a, *a, *a, *b, *b, *b])
        }
        System::ToricProduct { r1, r2 } => (
            vec![-r1, -r1, -r1, -r2, -r2, -r2],
            vec![*r1, *r1, *r1, *r2, *r2, *r2],
        ),
        System::SpinOscillator => (
            vec![-1.0, -1.0, -1.0, -1.0, -1.0],
            vec![1.0, 1.0, 1.0, 1.0, 1.0],
        ),
        System::LocalModel { .. } => (vec![-1.0; d], vec![1.0; d]),
    };
    PhaseBox { lo, hi }
}

pub fn default_base_box(model: &IntegrableModel) -> BaseBox {
    match model.system() {
        System::SphericalPendulum => BaseBox {
            a_lo: -2.0,
            a_hi: 2.0,
            b_lo: -1.2,
            b_hi: 3.0,
        },
        System::CoupledAngularMomenta { t, a, b } => {
            let jm = (a + b) * 1.05;
            let hm = ((1.0 - t) * b / a + t) * 1.05;
            BaseBox {
                a_lo: -jm,
                a_hi: jm,
                b_lo: -hm,
                b_hi: hm,
            }
        }
        System::ToricProduct { r1, r2 } => BaseBox {
            a_lo: -1.05 * r1,
            a_hi: 1.05 * r1,
            b_lo: -1.05 * r2,
            b_hi: 1.05 * r2,
        },
        System::SpinOscillator => BaseBox {
            a_lo: -1.2,
            a_hi: 3.0,
            b_lo: -1.5,
            b_hi: 1.5,
        },
        System::LocalModel { .. } => BaseBox {
            a_lo: -1.0,
            a_hi: 1.0,
            b_lo: -1.0,
            b_hi: 1.0,
        },
    }
}

/// Extremal values of H on the levels of J, with sampled seeds.
pub struct LevelSolver<'a> {
    model: &'a IntegrableModel,
    samples: Vec<(f64, f64, DVector<f64>)>,
}

impl<'a> LevelSolver<'a> {
    pub fn new(model: &'a IntegrableModel, bound: PhaseBound, count: usize) -> Self {
        let mut halton = Halton::new(model.sample_dim());
        let samples = (0..count)
            .map(|_| {
                let p = model.sample(&halton.next_point(), &bound);
                let (j, h) = model.moment(&p);
                (j, h, p)
            })
            .collect();
        Self { model, samples }
    }

    fn refine(&self, x: f64, start: &DVector<f64>) -> Option<(f64, DVector<f64>)> {
        let model = self.model;
        let xh = model.vector_field(Observable::H, start);
        let xj = model.vector_field(Observable::J, start);
        let mu0 = if xj.norm_squared() > 0.0 {
            xh.dot(&xj) / xj.norm_squared()
        } else {
            0.0
        };
        let residual = |p: &DVector<f64>, e: &DVector<f64>| {
            let r =
                model.vector_field(Observable::H, p) - model.vector_field(Observable::J, p) * e[0];
            let (j, _) = model.moment(p);
            let mut out = DVector::zeros(r.len() + 1);
            out.rows_mut(0, r.len()).copy_from(&r);
            out[r.len()] = j - x;
            out
        };
        let solved = manifold_lm(
            model,
            start,
            &DVector::from_element(1, mu0),
            residual,
            1e-12,
            80,
        )?;
        if solved.residual < 1e-9 {
            Some((model.moment(&solved.point).1, solved.point))
        } else {
            None
        }
    }

    /// Minimum or maximum of H on `J = x`, with an optional continuation
    /// hint.
    pub fn solve(
        &self,
        x: f64,
        kind: Extremum,
        hint: Option<&DVector<f64>>,
    ) -> Option<(f64, DVector<f64>)> {
        let mut near: Vec<&(f64, f64, DVector<f64>)> = self.samples.iter().collect();
        near.sort_by(|a, b| (a.0 - x).abs().total_cmp(&(b.0 - x).abs()));
        near.truncate(60);
        near.sort_by(|a, b| match kind {
            Extremum::Min => a.1.total_cmp(&b.1),
            Extremum::Max => b.1.total_cmp(&a.1),
        });
        let mut starts: Vec<DVector<f64>> = hint.into_iter().cloned().collect();
        starts.extend(near.iter().take(3).map(|s| s.2.clone()));
        let better = |a: f64, b: f64| match kind {
            Extremum::Min => a < b,
            Extremum::Max => a > b,
        };
        let mut best: Option<(f64, DVector<f64>)> = None;
        for s in &starts {
            if let Some((h, p)) = self.refine(x, s)
                && best.as_ref().is_none_or(|(bh, _)| better(h, *bh)) {
                    best = Some((h, p));
                }
        }
        best
    }
}

/// Minimum or maximum of H on the level `J = x`.
pub fn level_extremum(
    model: &IntegrableModel,
    x: f64,
    kind: Extremum,
    hint: Option<&DVector<f64>>,
) -> Option<(f64, DVector<f64>)> {
    LevelSolver::new(model, PhaseBound::default(), 4000).solve(x, kind, hint)
}

fn trace_curve(
    model: &IntegrableModel,
    solver: &LevelSolver,
    base: &BaseBox,
    kind: Extremum,
    resolution: usize,
) -> Vec<(MomentValue, WilliamsonType)> {
    let range = base.a_hi - base.a_lo;
    let steps = resolution.max((range / 1e-2).ceil() as usize);
    let mut hint: Option<DVector<f64>> = None;
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for i in 0..=steps {
        let x = base.a_lo + range * i as f64 / steps as f64;
        let Some((h, p)) = solver.solve(x, kind, hint.as_ref()) else {
            hint = None;
            continue;
        };
        hint = Some(p.clone());
        let c = MomentValue::new(x, h);
        if !base.contains(&c) {
            continue;
        }
        if let Ok(cp) = classify_with(model, &p, &mut rng)
            && cp.rank == 1 {
                out.push((c, cp.wtype));
            }
    }
    out
}

/// Rank-0 critical values with their types and the elliptic-regular
/// boundary curves traced as extrema of H over the levels of J.
pub fn bifurcation_diagram(
    model: &IntegrableModel,
    base: &BaseBox,
    phase: &PhaseBox,
    resolution: usize,
) -> Result<BifurcationDiagram> {
    let points: Vec<CriticalPoint> = find_critical_points(model, phase, 3, 1e-9)?;
    let mut critical_values: Vec<CriticalValue> = points
        .into_iter()
        .filter(|p| p.rank == 0)
        .map(|p| {
            let v = p.point.vector();
            let (a, b) = model.moment(&v);
            CriticalValue {
                value: MomentValue::new(a, b),
                wtype: p.wtype,
                nondegenerate: p.nondegenerate,
                point: p.point,
            }
        })
        .collect();
    critical_values.sort_by(|x, y| {
        x.value
            .a
            .total_cmp(&y.value.a)
            .then(x.value.b.total_cmp(&y.value.b))
    });
    let mut focus_values: Vec<MomentValue> = critical_values
        .iter()
        .filter(|c| c.wtype.is_focus_focus())
        .map(|c| c.value)
        .collect();
    focus_values.sort_by(|x, y| x.a.total_cmp(&y.a));

    let mut curves = Vec::new();
    if model.dof() == 2 && model.has_circle_action() {
        let solver = LevelSolver::new(model, PhaseBound::default(), 4000);
        let kinds: Vec<(Branch, Extremum)> = if model.j_is_proper() {
            vec![
                (Branch::Lower, Extremum::Min),
                (Branch::Upper, Extremum::Max),
            ]
        } else {
            vec![(Branch::Lower, Extremum::Min)]
        };
        curves = kinds
            .par_iter()
            .map(|(branch, kind)| RankOneCurve {
                branch: *branch,
                samples: trace_curve(model, &solver, base, *kind, resolution),
            })
            .collect();
    }
    let m_ff = focus_values.len();
    Ok(BifurcationDiagram {
        critical_values,
        curves,
        focus_values,
        m_ff,
    })
}

/// Numerical check of the semi-toric hypotheses.
pub fn check_semitoric(model: &IntegrableModel, sample_budget: usize) -> SemitoricReport {
    let s2 = if !model.has_circle_action() {
        Verdict::Fail
    } else {
        let mut halton = Halton::new(model.sample_dim());
        let bound = PhaseBound { radius: 1.5 };
        let pts: Vec<DVector<f64>> = (0..sample_budget.max(1))
            .map(|_| model.sample(&halton.next_point(), &bound))
            .collect();
        let ok: Vec<Option<bool>> = pts
            .par_iter()
            .map(|p| {
                flow_raw(model, Observable::J, p, std::f64::consts::TAU, 1e-10)
                    .ok()
                    .map(|q| (q - p).norm() < 1e-6)
            })
            .collect();
        if ok.contains(&Some(false)) {
            Verdict::Fail
        } else if ok.iter().all(|o| o.is_some()) {
            Verdict::Pass
        } else {
            Verdict::Inconclusive
        }
    };
    let base = default_base_box(model);
    let phase = default_phase_box(model);
    let (s1, s3) = match bifurcation_diagram(model, &base, &phase, 40) {
        Err(_) => (Verdict::Inconclusive, Verdict::Inconclusive),
        Ok(d) => {
            let types = d
                .critical_values
                .iter()
                .map(|c| (c.wtype, c.nondegenerate))
                .chain(
                    d.curves
                        .iter()
                        .flat_map(|c| c.samples.iter().map(|s| (s.1, true))),
                );
            let mut s1 = Verdict::Pass;
            for (t, nd) in types {
                if !nd || t.k_h > 0 {
                    s1 = Verdict::Fail;
                }
            }
            if d.critical_values.is_empty() {
                s1 = Verdict::Inconclusive;
            }
            let distinct = d
                .focus_values
                .windows(2)
                .all(|w| (w[1].a - w[0].a).abs() > 1e-6);
            (
                s1,
                if distinct {
                    Verdict::Pass
                } else {
                    Verdict::Fail
                },
            )
        }
    };
    SemitoricReport {
        s1_nondegenerate: s1,
        s2_circle_action: s2,
        s3_simple: s3,
        j_proper: if model.j_is_proper() {
            Verdict::Pass
        } else {
            Verdict::NotChecked
        },
    }
}
