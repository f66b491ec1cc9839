use serde::{Deserialize, Serialize};

use super::image::{window_samples, ClassicalImage};
use super::lattice::PointIndex;
use crate::models::IntegrableModel;
use crate::quantum::JointSpectrum;

/// Two-sided distance between the trusted joint spectrum and the sampled
/// classical image inside a window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Containment {
    pub hbar: f64,
    /// Largest distance from a trusted eigenvalue to `F(M)`.
    pub outside: f64,
    /// Largest distance from a sample of `F(M) ∩ window` to the nearest
    /// trusted eigenvalue.
    pub uncovered: f64,
    pub samples: usize,
}

impl Containment {
    pub fn delta(&self) -> f64 {
        self.outside.max(self.uncovered)
    }
}

pub fn containment(
    spec: &JointSpectrum,
    model: &IntegrableModel,
    image: &ClassicalImage,
    samples: usize,
) -> Containment {
    let outside = spec
        .trusted()
        .map(|p| image.distance([p.mu, p.lambda]))
        .fold(0.0, f64::max);
    let mut cloud = image.boundary_points();
    cloud.extend(window_samples(model, &image.window, samples));
    let index = PointIndex::new(spec);
    let w = &image.window;
    let diameter = (w.a_hi - w.a_lo).hypot(w.b_hi - w.b_lo);
    let uncovered = cloud
        .iter()
        .map(|q| {
            let mut r = spec.hbar;
            loop {
                if let Some(&(_, d)) = index.within(*q, r).first() {
                    return d;
                }
                if r > 2.0 * diameter {
                    return f64::INFINITY;
                }
                r *= 2.0;
            }
        })
        .fold(0.0, f64::max);
    Containment {
        hbar: spec.hbar,
        outside,
        uncovered,
        samples: cloud.len(),
    }
}
