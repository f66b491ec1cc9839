use std::f64::consts::PI;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{IntegrableModel, System};

const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Halton low-discrepancy sequence in up to 12 dimensions.
#[derive(Clone, Debug)]
pub struct Halton {
    dim: usize,
    index: u64,
}

impl Halton {
    pub fn new(dim: usize) -> Self {
        assert!(
            dim <= PRIMES.len(),
            "Halton sequence supports at most 12 dimensions"
        );
        // Skip the first few points, which cluster near the origin.
        Self { dim, index: 20 }
    }

    pub fn skip(mut self, n: u64) -> Self {
        self.index += n;
        self
    }

    fn radical_inverse(mut i: u64, base: u64) -> f64 {
        let inv = 1.0 / base as f64;
        let mut f = inv;
        let mut r = 0.0;
        while i > 0 {
            r += f * (i % base) as f64;
            i /= base;
            f *= inv;
        }
        r
    }

    pub fn next_point(&mut self) -> Vec<f64> {
        self.index += 1;
        (0..self.dim)
            .map(|d| Self::radical_inverse(self.index, PRIMES[d]))
            .collect()
    }
}

/// Bounds for sampling non-compact phase spaces.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseBound {
    /// Momentum radius for the pendulum, oscillator radius for the
    /// spin-oscillator, half-width of the box for local models.
    pub radius: f64,
}

impl Default for PhaseBound {
    fn default() -> Self {
        Self { radius: 3.0 }
    }
}

fn sphere_point(u0: f64, u1: f64, r: f64) -> [f64; 3] {
    let z = 2.0 * u0 - 1.0;
    let s = (1.0 - z * z).max(0.0).sqrt();
    let phi = 2.0 * PI * u1;
    [r * s * phi.cos(), r * s * phi.sin(), r * z]
}

impl IntegrableModel {
    /// Dimension of the unit cube parametrizing [`IntegrableModel::sample`].
    pub fn sample_dim(&self) -> usize {
        match self.system {
            System::SpinOscillator => 4,
            System::LocalModel { .. } => self.dim(),
            _ => 4,
        }
    }

    /// Maps a point of the unit cube to phase space. The pushforward of the
    /// uniform measure is proportional to Liouville measure on the sampled
    /// region.
    pub fn sample(&self, u: &[f64], bound: &PhaseBound) -> DVector<f64> {
        match self.system {
            System::SphericalPendulum => {
                let x = sphere_point(u[0], u[1], 1.0);
                let helper = if x[2].abs() < 0.9 {
                    [0.0, 0.0, 1.0]
                } else {
                    [1.0, 0.0, 0.0]
                };
                let e1 = normalize(sub(helper, scale(x, dot(helper, x))));
                let e2 = cross(x, e1);
                let rho = bound.radius * u[2].sqrt();
                let psi = 2.0 * PI * u[3];
                let (s, c) = psi.sin_cos();
                let y: Vec<f64> = (0..3).map(|k| rho * (c * e1[k] + s * e2[k])).collect();
                DVector::from_vec(vec![x[0], x[1], x[2], y[0], y[1], y[2]])
            }
            System::CoupledAngularMomenta { a, b, .. } => {
                let x = sphere_point(u[0], u[1], a);
                let y = sphere_point(u[2], u[3], b);
                DVector::from_vec(vec![x[0], x[1], x[2], y[0], y[1], y[2]])
            }
            System::ToricProduct { r1, r2 } => {
                let x = sphere_point(u[0], u[1], r1);
                let y = sphere_point(u[2], u[3], r2);
                DVector::from_vec(vec![x[0], x[1], x[2], y[0], y[1], y[2]])
            }
            System::SpinOscillator => {
                let x = sphere_point(u[0], u[1], 1.0);
                let rho = bound.radius * u[2].sqrt();
                let psi = 2.0 * PI * u[3];
                DVector::from_vec(vec![x[0], x[1], x[2], rho * psi.cos(), rho * psi.sin()])
            }
            System::LocalModel { .. } => {
                DVector::from_iterator(self.dim(), u.iter().map(|v| bound.radius * (2.0 * v - 1.0)))
            }
        }
    }

    /// Liouville volume of the sampled region, in the normalization where
    /// each sphere factor of radius r has volume 4πr.
    pub fn sample_volume(&self, bound: &PhaseBound) -> f64 {
        match self.system {
            System::SphericalPendulum => 4.0 * PI * PI * bound.radius * bound.radius,
            System::CoupledAngularMomenta { a, b, .. } => 16.0 * PI * PI * a * b,
            System::ToricProduct { r1, r2 } => 16.0 * PI * PI * r1 * r2,
            System::SpinOscillator => 4.0 * PI * PI * bound.radius * bound.radius,
            System::LocalModel { .. } => (2.0 * bound.radius).powi(self.dim() as i32),
        }
    }
}

fn dot(u: [f64; 3], v: [f64; 3]) -> f64 {
    u[0] * v[0] + u[1] * v[1] + u[2] * v[2]
}

fn scale(u: [f64; 3], s: f64) -> [f64; 3] {
    [u[0] * s, u[1] * s, u[2] * s]
}

fn sub(u: [f64; 3], v: [f64; 3]) -> [f64; 3] {
    [u[0] - v[0], u[1] - v[1], u[2] - v[2]]
}

fn normalize(u: [f64; 3]) -> [f64; 3] {
    scale(u, 1.0 / dot(u, u).sqrt())
}

fn cross(u: [f64; 3], v: [f64; 3]) -> [f64; 3] {
    [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ]
}
