//! Built-in integrable systems with two degrees of freedom.
//!
//! Every model lives in an ambient Euclidean space. Sphere factors are
//! embedded in ℝ³ and carry the Lie–Poisson structure `X_f = x × ∇f`, so that
//! every height function rotates its sphere with unit angular speed. The
//! cotangent bundle of the sphere is embedded in `T*ℝ³ = ℝ⁶` and uses the Dirac
//! bracket of the constraints `|x|² = 1`, `⟨x, y⟩ = 0`.
//!
//! Brackets follow `{f, g} = X_f(g)`, with `X_f = Π∇f`. In canonical
//! coordinates `(x, ξ)` this gives `X_{ξ₁} = ∂/∂x₁` and `{ξ₁, x₁} = 1`.

mod descriptor;
mod flow;
mod sampling;

pub use descriptor::ModelDescriptor;
pub use flow::{flow, flow_raw};
pub use sampling::{Halton, PhaseBound};

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One block of a local normal form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LocalBlock {
    Regular,
    Elliptic,
    Hyperbolic,
    FocusFocus,
}

#[derive(Clone, Debug, PartialEq)]
pub enum System {
    SphericalPendulum,
    CoupledAngularMomenta { t: f64, a: f64, b: f64 },
    SpinOscillator,
    ToricProduct { r1: f64, r2: f64 },
    LocalModel { blocks: Vec<LocalBlock> },
}

/// A function on phase space that can generate a flow or enter a bracket.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Observable {
    J,
    H,
    /// `t₁·J + t₂·H`
    Combination(f64, f64),
    /// The ambient coordinate function with the given index.
    Coordinate(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentValue {
    pub a: f64,
    pub b: f64,
}

impl MomentValue {
    pub fn new(a: f64, b: f64) -> Self {
        Self { a, b }
    }

    pub fn dist(&self, other: &MomentValue) -> f64 {
        (self.a - other.a).hypot(self.b - other.b)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    pub model_id: String,
    pub chart_id: String,
    pub coords: Vec<f64>,
}

impl ChartPoint {
    pub fn vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.coords)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TangentVector {
    pub chart_id: String,
    pub components: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntegrableModel {
    system: System,
}

const CONSTRAINT_TOL: f64 = 1e-10;

fn cross(u: [f64; 3], v: [f64; 3]) -> [f64; 3] {
    [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ]
}

fn dot3(u: [f64; 3], v: [f64; 3]) -> f64 {
    u[0] * v[0] + u[1] * v[1] + u[2] * v[2]
}

fn slice3(p: &DVector<f64>, start: usize) -> [f64; 3] {
    [p[start], p[start + 1], p[start + 2]]
}

/// Rotation of the first two components of a 3-vector by `angle`
/// (counter-clockwise seen from +e₃).
fn rotate_z(v: [f64; 3], angle: f64) -> [f64; 3] {
    let (s, c) = angle.sin_cos();
    [c * v[0] - s * v[1], s * v[0] + c * v[1], v[2]]
}

impl IntegrableModel {
    pub fn spherical_pendulum() -> Self {
        Self {
            system: System::SphericalPendulum,
        }
    }

    pub fn coupled_angular_momenta(t: f64, a: f64, b: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) || !(a > 0.0) || !(b > 0.0) || !a.is_finite() || !b.is_finite()
        {
            return Err(Error::Parameter(format!(
                "coupled_angular_momenta needs 0 <= t <= 1 and a, b > 0 (got t={t}, a={a}, b={b})"
            )));
        }
        Ok(Self {
            system: System::CoupledAngularMomenta { t, a, b },
        })
    }

    pub fn spin_oscillator() -> Self {
        Self {
            system: System::SpinOscillator,
        }
    }

    pub fn toric_product(r1: f64, r2: f64) -> Result<Self> {
        if !(r1 > 0.0 && r2 > 0.0 && r1.is_finite() && r2.is_finite()) {
            return Err(Error::Parameter(format!(
                "toric_product radii must be positive (got {r1}, {r2})"
            )));
        }
        Ok(Self {
            system: System::ToricProduct { r1, r2 },
        })
    }

    /// Local normal form with Williamson signature `(k, k_e, k_h, k_ff)`.
    /// Blocks are laid out regular first, then elliptic, hyperbolic and
    /// focus-focus; coordinates are `(x₁..x_n, ξ₁..ξ_n)`.
    pub fn local_model(k: usize, ke: usize, kh: usize, kff: usize) -> Result<Self> {
        let n = k + ke + kh + 2 * kff;
        if n == 0 || n > 2 {
            return Err(Error::Parameter(format!(
                "local_model_Q supports 1 or 2 degrees of freedom (signature gives {n})"
            )));
        }
        let mut blocks = Vec::new();
        blocks.extend(std::iter::repeat_n(LocalBlock::Regular, k));
        blocks.extend(std::iter::repeat_n(LocalBlock::Elliptic, ke));
        blocks.extend(std::iter::repeat_n(LocalBlock::Hyperbolic, kh));
        blocks.extend(std::iter::repeat_n(LocalBlock::FocusFocus, kff));
        Ok(Self {
            system: System::LocalModel { blocks },
        })
    }

    pub fn system(&self) -> &System {
        &self.system
    }

    pub fn name(&self) -> &'static str {
        match self.system {
            System::SphericalPendulum => "spherical_pendulum",
            System::CoupledAngularMomenta { .. } => "coupled_angular_momenta",
            System::SpinOscillator => "spin_oscillator",
            System::ToricProduct { .. } => "toric_product",
            System::LocalModel { .. } => "local_model_Q",
        }
    }

    pub fn params(&self) -> BTreeMap<String, f64> {
        let mut m = BTreeMap::new();
        match &self.system {
            System::CoupledAngularMomenta { t, a, b } => {
                m.insert("t".into(), *t);
                m.insert("a".into(), *a);
                m.insert("b".into(), *b);
            }
            System::ToricProduct { r1, r2 } => {
                m.insert("r1".into(), *r1);
                m.insert("r2".into(), *r2);
            }
            System::LocalModel { blocks } => {
                let count = |b: LocalBlock| blocks.iter().filter(|x| **x == b).count() as f64;
                m.insert("k".into(), count(LocalBlock::Regular));
                m.insert("k_e".into(), count(LocalBlock::Elliptic));
                m.insert("k_h".into(), count(LocalBlock::Hyperbolic));
                m.insert("k_ff".into(), count(LocalBlock::FocusFocus));
            }
            _ => {}
        }
        m
    }

    /// Identifier used in chart points: name plus parameters.
    pub fn id(&self) -> String {
        let params = self.params();
        if params.is_empty() {
            return self.name().to_string();
        }
        let body: Vec<String> = params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!("{}({})", self.name(), body.join(","))
    }

    pub fn chart_id(&self) -> &'static str {
        match self.system {
            System::SphericalPendulum => "TS2 in R6",
            System::CoupledAngularMomenta { .. } | System::ToricProduct { .. } => "S2xS2 in R6",
            System::SpinOscillator => "S2xR2 in R5",
            System::LocalModel { .. } => "R2n canonical",
        }
    }

    pub fn dof(&self) -> usize {
        match &self.system {
            System::LocalModel { blocks } => blocks
                .iter()
                .map(|b| if *b == LocalBlock::FocusFocus { 2 } else { 1 })
                .sum(),
            _ => 2,
        }
    }

    /// Ambient dimension.
    pub fn dim(&self) -> usize {
        match self.system {
            System::SpinOscillator => 5,
            System::LocalModel { .. } => 2 * self.dof(),
            _ => 6,
        }
    }

    /// Whether J generates an effective 2π-periodic circle action.
    pub fn has_circle_action(&self) -> bool {
        !matches!(self.system, System::LocalModel { .. })
    }

    /// Whether J is proper (the spherical pendulum's J is not).
    pub fn j_is_proper(&self) -> bool {
        !matches!(
            self.system,
            System::SphericalPendulum | System::LocalModel { .. }
        )
    }

    pub fn is_compact(&self) -> bool {
        matches!(
            self.system,
            System::CoupledAngularMomenta { .. } | System::ToricProduct { .. }
        )
    }

    pub fn point(&self, coords: &[f64]) -> ChartPoint {
        ChartPoint {
            model_id: self.id(),
            chart_id: self.chart_id().to_string(),
            coords: coords.to_vec(),
        }
    }

    pub fn point_from(&self, p: &DVector<f64>) -> ChartPoint {
        self.point(p.as_slice())
    }

    fn local_blocks(&self) -> &[LocalBlock] {
        match &self.system {
            System::LocalModel { blocks } => blocks,
            _ => &[],
        }
    }

    /// Components of the local normal form, `(q₁, …, q_n)`.
    fn local_values(&self, p: &DVector<f64>) -> Vec<f64> {
        let n = self.dof();
        let mut q = Vec::with_capacity(n);
        let mut i = 0;
        for block in self.local_blocks() {
            let (x, xi) = (p[i], p[n + i]);
            match block {
                LocalBlock::Regular => {
                    q.push(xi);
                    i += 1;
                }
                LocalBlock::Elliptic => {
                    q.push(0.5 * (x * x + xi * xi));
                    i += 1;
                }
                LocalBlock::Hyperbolic => {
                    q.push(x * xi);
                    i += 1;
                }
                LocalBlock::FocusFocus => {
                    let (x2, xi2) = (p[i + 1], p[n + i + 1]);
                    q.push(x * xi2 - x2 * xi);
                    q.push(x * xi + x2 * xi2);
                    i += 2;
                }
            }
        }
        q
    }

    fn local_gradients(&self, p: &DVector<f64>) -> Vec<DVector<f64>> {
        let n = self.dof();
        let mut out = Vec::with_capacity(n);
        let mut i = 0;
        for block in self.local_blocks() {
            let (x, xi) = (p[i], p[n + i]);
            match block {
                LocalBlock::Regular => {
                    let mut g = DVector::zeros(2 * n);
                    g[n + i] = 1.0;
                    out.push(g);
                    i += 1;
                }
                LocalBlock::Elliptic => {
                    let mut g = DVector::zeros(2 * n);
                    g[i] = x;
                    g[n + i] = xi;
                    out.push(g);
                    i += 1;
                }
                LocalBlock::Hyperbolic => {
                    let mut g = DVector::zeros(2 * n);
                    g[i] = xi;
                    g[n + i] = x;
                    out.push(g);
                    i += 1;
                }
                LocalBlock::FocusFocus => {
                    let (x2, xi2) = (p[i + 1], p[n + i + 1]);
                    let mut g1 = DVector::zeros(2 * n);
                    g1[i] = xi2;
                    g1[i + 1] = -xi;
                    g1[n + i] = -x2;
                    g1[n + i + 1] = x;
                    let mut g2 = DVector::zeros(2 * n);
                    g2[i] = xi;
                    g2[i + 1] = xi2;
                    g2[n + i] = x;
                    g2[n + i + 1] = x2;
                    out.push(g1);
                    out.push(g2);
                    i += 2;
                }
            }
        }
        out
    }

    /// `(J(p), H(p))` without constraint checks.
    pub fn moment(&self, p: &DVector<f64>) -> (f64, f64) {
        match self.system {
            System::SphericalPendulum => {
                let j = p[0] * p[4] - p[1] * p[3];
                let h = 0.5 * (p[3] * p[3] + p[4] * p[4] + p[5] * p[5]) + p[2];
                (j, h)
            }
            System::CoupledAngularMomenta { t, a, b } => {
                let x = slice3(p, 0);
                let y = slice3(p, 3);
                (x[2] + y[2], (1.0 - t) / a * y[2] + t / (a * b) * dot3(x, y))
            }
            System::SpinOscillator => {
                let (x, y, z, u, v) = (p[0], p[1], p[2], p[3], p[4]);
                (0.5 * (u * u + v * v) + z, 0.5 * (u * x + v * y))
            }
            System::ToricProduct { .. } => (p[2], p[5]),
            System::LocalModel { .. } => {
                let q = self.local_values(p);
                (q[0], q.get(1).copied().unwrap_or(0.0))
            }
        }
    }

    pub fn value(&self, obs: Observable, p: &DVector<f64>) -> f64 {
        match obs {
            Observable::J => self.moment(p).0,
            Observable::H => self.moment(p).1,
            Observable::Combination(t1, t2) => {
                let (j, h) = self.moment(p);
                t1 * j + t2 * h
            }
            Observable::Coordinate(i) => p[i],
        }
    }

    /// Ambient gradients `(∇J, ∇H)`.
    pub fn moment_gradients(&self, p: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let d = self.dim();
        match self.system {
            System::SphericalPendulum => {
                let gj = DVector::from_vec(vec![p[4], -p[3], 0.0, -p[1], p[0], 0.0]);
                let gh = DVector::from_vec(vec![0.0, 0.0, 1.0, p[3], p[4], p[5]]);
                (gj, gh)
            }
            System::CoupledAngularMomenta { t, a, b } => {
                let gj = DVector::from_vec(vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0]);
                let c = t / (a * b);
                let gh = DVector::from_vec(vec![
                    c * p[3],
                    c * p[4],
                    c * p[5],
                    c * p[0],
                    c * p[1],
                    c * p[2] + (1.0 - t) / a,
                ]);
                (gj, gh)
            }
            System::SpinOscillator => {
                let gj = DVector::from_vec(vec![0.0, 0.0, 1.0, p[3], p[4]]);
                let gh =
                    DVector::from_vec(vec![0.5 * p[3], 0.5 * p[4], 0.0, 0.5 * p[0], 0.5 * p[1]]);
                (gj, gh)
            }
            System::ToricProduct { .. } => {
                let mut gj = DVector::zeros(d);
                gj[2] = 1.0;
                let mut gh = DVector::zeros(d);
                gh[5] = 1.0;
                (gj, gh)
            }
            System::LocalModel { .. } => {
                let mut g = self.local_gradients(p);
                let gh = if g.len() > 1 {
                    g.pop().unwrap()
                } else {
                    DVector::zeros(d)
                };
                (g.pop().unwrap(), gh)
            }
        }
    }

    pub fn gradient(&self, obs: Observable, p: &DVector<f64>) -> DVector<f64> {
        match obs {
            Observable::J => self.moment_gradients(p).0,
            Observable::H => self.moment_gradients(p).1,
            Observable::Combination(t1, t2) => {
                let (gj, gh) = self.moment_gradients(p);
                gj * t1 + gh * t2
            }
            Observable::Coordinate(i) => {
                let mut g = DVector::zeros(self.dim());
                g[i] = 1.0;
                g
            }
        }
    }

    /// Hamiltonian vector field of a function with ambient gradient `g`.
    pub fn field_from_gradient(&self, p: &DVector<f64>, g: &DVector<f64>) -> DVector<f64> {
        match self.system {
            System::SphericalPendulum => {
                let canonical = |g: &DVector<f64>| -> DVector<f64> {
                    DVector::from_vec(vec![g[3], g[4], g[5], -g[0], -g[1], -g[2]])
                };
                let x = slice3(p, 0);
                let y = slice3(p, 3);
                let x0 = canonical(g);
                // X_{φ₁} = (0, −x), X_{φ₂} = (x, −y) for φ₁ = (|x|²−1)/2, φ₂ = ⟨x,y⟩.
                let f_phi1 = dot3(x, slice3(&x0, 0));
                let f_phi2 = dot3(y, slice3(&x0, 0)) + dot3(x, slice3(&x0, 3));
                let c = -dot3(x, x);
                let mut out = x0;
                for i in 0..3 {
                    out[i] += f_phi1 * x[i] / c;
                    out[3 + i] += (f_phi1 * (-y[i]) - f_phi2 * (-x[i])) / c;
                }
                out
            }
            System::CoupledAngularMomenta { .. } | System::ToricProduct { .. } => {
                let a = cross(slice3(p, 0), slice3(g, 0));
                let b = cross(slice3(p, 3), slice3(g, 3));
                DVector::from_vec(vec![a[0], a[1], a[2], b[0], b[1], b[2]])
            }
            System::SpinOscillator => {
                let s = cross(slice3(p, 0), slice3(g, 0));
                DVector::from_vec(vec![s[0], s[1], s[2], g[4], -g[3]])
            }
            System::LocalModel { .. } => {
                let n = self.dof();
                let mut out = DVector::zeros(2 * n);
                for i in 0..n {
                    out[i] = g[n + i];
                    out[n + i] = -g[i];
                }
                out
            }
        }
    }

    /// `X_f = Π∇f`, tangent to the constraint set.
    pub fn vector_field(&self, obs: Observable, p: &DVector<f64>) -> DVector<f64> {
        let g = self.gradient(obs, p);
        self.field_from_gradient(p, &g)
    }

    /// `{f, g} = X_f(g)`.
    pub fn bracket(&self, f: Observable, g: Observable, p: &DVector<f64>) -> f64 {
        self.vector_field(f, p).dot(&self.gradient(g, p))
    }

    /// Normals of the constraint set at `p` (gradients of the defining
    /// constraints; empty for flat charts).
    pub fn normals(&self, p: &DVector<f64>) -> Vec<DVector<f64>> {
        let d = self.dim();
        let pick = |ranges: &[(usize, usize)], src: &[usize]| -> DVector<f64> {
            let mut v = DVector::zeros(d);
            for (&(dst, len), &s) in ranges.iter().zip(src) {
                for k in 0..len {
                    v[dst + k] = p[s + k];
                }
            }
            v
        };
        match self.system {
            System::SphericalPendulum => {
                vec![pick(&[(0, 3)], &[0]), pick(&[(0, 3), (3, 3)], &[3, 0])]
            }
            System::CoupledAngularMomenta { .. } | System::ToricProduct { .. } => {
                vec![pick(&[(0, 3)], &[0]), pick(&[(3, 3)], &[3])]
            }
            System::SpinOscillator => vec![pick(&[(0, 3)], &[0])],
            System::LocalModel { .. } => vec![],
        }
    }

    /// Named constraint residuals.
    pub fn constraint_residuals(&self, p: &DVector<f64>) -> Vec<(&'static str, f64, f64)> {
        match self.system {
            System::SphericalPendulum => {
                let x = slice3(p, 0);
                let y = slice3(p, 3);
                vec![
                    ("|x|^2 = 1", dot3(x, x) - 1.0, 1.0),
                    ("<x,y> = 0", dot3(x, y), 1.0),
                ]
            }
            System::CoupledAngularMomenta { a, b, .. } => {
                let x = slice3(p, 0);
                let y = slice3(p, 3);
                vec![
                    ("|x|^2 = a^2", dot3(x, x) - a * a, a * a),
                    ("|y|^2 = b^2", dot3(y, y) - b * b, b * b),
                ]
            }
            System::ToricProduct { r1, r2 } => {
                let x = slice3(p, 0);
                let y = slice3(p, 3);
                vec![
                    ("|x|^2 = r1^2", dot3(x, x) - r1 * r1, r1 * r1),
                    ("|y|^2 = r2^2", dot3(y, y) - r2 * r2, r2 * r2),
                ]
            }
            System::SpinOscillator => {
                let x = slice3(p, 0);
                vec![("|(x,y,z)|^2 = 1", dot3(x, x) - 1.0, 1.0)]
            }
            System::LocalModel { .. } => vec![],
        }
    }

    /// Validates dimension, finiteness and chart constraints.
    pub fn check(&self, p: &DVector<f64>) -> Result<()> {
        let domain = |invariant: String, residual: f64| Error::Domain {
            model: self.name().to_string(),
            invariant,
            residual,
        };
        if p.len() != self.dim() {
            return Err(domain(
                format!("dimension {}", self.dim()),
                p.len() as f64 - self.dim() as f64,
            ));
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(domain("finite coordinates".into(), f64::NAN));
        }
        for (name, r, scale) in self.constraint_residuals(p) {
            if r.abs() >= CONSTRAINT_TOL * scale.max(1.0) {
                return Err(domain(name.to_string(), r));
            }
        }
        Ok(())
    }

    pub fn check_point(&self, p: &ChartPoint) -> Result<DVector<f64>> {
        let v = p.vector();
        self.check(&v)?;
        Ok(v)
    }

    /// Orthogonal projection back onto the constraint set.
    pub fn project(&self, p: &mut DVector<f64>) {
        let rescale = |p: &mut DVector<f64>, start: usize, r: f64| {
            let n = (p[start].powi(2) + p[start + 1].powi(2) + p[start + 2].powi(2)).sqrt();
            if n > 0.0 {
                for k in 0..3 {
                    p[start + k] *= r / n;
                }
            }
        };
        match self.system {
            System::SphericalPendulum => {
                rescale(p, 0, 1.0);
                let x = slice3(p, 0);
                let xy = dot3(x, slice3(p, 3));
                for k in 0..3 {
                    p[3 + k] -= xy * x[k];
                }
            }
            System::CoupledAngularMomenta { a, b, .. } => {
                rescale(p, 0, a);
                rescale(p, 3, b);
            }
            System::ToricProduct { r1, r2 } => {
                rescale(p, 0, r1);
                rescale(p, 3, r2);
            }
            System::SpinOscillator => rescale(p, 0, 1.0),
            System::LocalModel { .. } => {}
        }
    }

    /// Orthonormal basis of the tangent space of the constraint set, as the
    /// columns of a `dim × 2n` matrix.
    pub fn tangent_basis(&self, p: &DVector<f64>) -> DMatrix<f64> {
        let d = self.dim();
        let mut frame: Vec<DVector<f64>> = Vec::new();
        for n in self.normals(p) {
            let mut v = n;
            for f in &frame {
                let c = f.dot(&v);
                v -= f * c;
            }
            let norm = v.norm();
            if norm > 1e-12 {
                frame.push(v / norm);
            }
        }
        let normal_count = frame.len();
        let mut candidates: Vec<(f64, DVector<f64>)> = (0..d)
            .map(|i| {
                let mut e = DVector::zeros(d);
                e[i] = 1.0;
                let mut v = e;
                for f in &frame[..normal_count] {
                    let c = f.dot(&v);
                    v -= f * c;
                }
                (v.norm(), v)
            })
            .collect();
        candidates.sort_by(|a, b| b.0.total_cmp(&a.0));
        let target = 2 * self.dof();
        for (_, v) in candidates {
            if frame.len() - normal_count == target {
                break;
            }
            let mut v = v;
            for f in &frame {
                let c = f.dot(&v);
                v -= f * c;
            }
            let norm = v.norm();
            if norm > 1e-6 {
                frame.push(v / norm);
            }
        }
        DMatrix::from_columns(&frame[normal_count..])
    }

    /// The exact J-flow for time `angle`, when J generates a circle action.
    pub fn j_rotation(&self, angle: f64, p: &DVector<f64>) -> Option<DVector<f64>> {
        let put = |out: &mut DVector<f64>, start: usize, v: [f64; 3]| {
            for k in 0..3 {
                out[start + k] = v[k];
            }
        };
        let mut out = p.clone();
        match self.system {
            System::SphericalPendulum => {
                put(&mut out, 0, rotate_z(slice3(p, 0), angle));
                put(&mut out, 3, rotate_z(slice3(p, 3), angle));
            }
            System::CoupledAngularMomenta { .. } => {
                put(&mut out, 0, rotate_z(slice3(p, 0), -angle));
                put(&mut out, 3, rotate_z(slice3(p, 3), -angle));
            }
            System::ToricProduct { .. } => {
                put(&mut out, 0, rotate_z(slice3(p, 0), -angle));
            }
            System::SpinOscillator => {
                put(&mut out, 0, rotate_z(slice3(p, 0), -angle));
                let (s, c) = (-angle).sin_cos();
                out[3] = c * p[3] - s * p[4];
                out[4] = s * p[3] + c * p[4];
            }
            System::LocalModel { .. } => return None,
        }
        Some(out)
    }

    /// Coordinates on the orbit space of the J-action (invariant functions).
    pub fn reduced(&self, p: &DVector<f64>) -> Option<DVector<f64>> {
        let v = match self.system {
            System::SphericalPendulum => vec![p[2], p[5]],
            System::CoupledAngularMomenta { .. } => {
                vec![p[2], p[0] * p[3] + p[1] * p[4], p[0] * p[4] - p[1] * p[3]]
            }
            System::ToricProduct { .. } => vec![p[2], p[3], p[4], p[5]],
            System::SpinOscillator => {
                vec![p[2], p[3] * p[0] + p[4] * p[1], p[3] * p[1] - p[4] * p[0]]
            }
            System::LocalModel { .. } => return None,
        };
        Some(DVector::from_vec(v))
    }

    /// Radii of the sphere factors.
    pub fn sphere_radii(&self) -> Vec<f64> {
        match self.system {
            System::CoupledAngularMomenta { a, b, .. } => vec![a, b],
            System::ToricProduct { r1, r2 } => vec![r1, r2],
            System::SpinOscillator | System::SphericalPendulum => vec![1.0],
            System::LocalModel { .. } => vec![],
        }
    }
}

pub fn eval_moment(model: &IntegrableModel, p: &ChartPoint) -> Result<MomentValue> {
    let v = model.check_point(p)?;
    let (a, b) = model.moment(&v);
    Ok(MomentValue { a, b })
}

pub fn hamiltonian_vector_field(
    model: &IntegrableModel,
    which: Observable,
    p: &ChartPoint,
) -> Result<TangentVector> {
    let v = model.check_point(p)?;
    let x = model.vector_field(which, &v);
    Ok(TangentVector {
        chart_id: model.chart_id().to_string(),
        components: x.as_slice().to_vec(),
    })
}

pub fn poisson_bracket(
    model: &IntegrableModel,
    f: Observable,
    g: Observable,
    p: &ChartPoint,
) -> Result<f64> {
    let v = model.check_point(p)?;
    Ok(model.bracket(f, g, &v))
}
