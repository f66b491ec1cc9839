use serde::{Deserialize, Serialize};

use super::hull::{convex_hull, hausdorff_distance, ConvexHull2D};
use super::image::classical_image;
use super::lattice::{detect_focus_focus, quantum_monodromy, volume_invariant};
use crate::actions::{rectangle_loop, MonodromyMatrix};
use crate::error::{Error, Result};
use crate::models::{IntegrableModel, MomentValue};
use crate::quantum::{joint_spectrum, quantize, JointSpectrum};
use crate::singularities::BaseBox;

const IMAGE_COLUMNS: usize = 801;
const IMAGE_SAMPLES: usize = 200_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InverseReport {
    /// ħ of the spectrum the invariants were read from.
    pub hbar: f64,
    /// Hull of the trusted joint eigenvalues.
    pub hull: ConvexHull2D,
    /// `(ħ, d_H)` pairs from a convergence sweep.
    pub hausdorff_by_hbar: Vec<(f64, f64)>,
    pub mff_estimate: usize,
    pub focus_estimates: Vec<MomentValue>,
    /// Holonomy of a square loop around each focus estimate.
    pub monodromy: Vec<Option<MonodromyMatrix>>,
    pub volume_invariants: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Reads classical invariants off a joint spectrum.
pub fn invert(spec: &JointSpectrum) -> Result<InverseReport> {
    let pts: Vec<[f64; 2]> = spec.trusted().map(|p| [p.mu, p.lambda]).collect();
    let detection = detect_focus_focus(spec)?;
    let mut warnings = Vec::new();
    for a in &detection.ambiguous {
        warnings.push(format!(
            "ambiguous monodromy cluster near ({:.4}, {:.4})",
            a.a, a.b
        ));
    }
    let w = 5.0 * spec.hbar;
    let mut monodromy = Vec::new();
    let mut volumes = Vec::new();
    for f in &detection.estimates {
        match quantum_monodromy(spec, &rectangle_loop(*f, w, w)) {
            Ok(m) => monodromy.push(Some(m)),
            Err(e) => {
                warnings.push(format!("monodromy around ({:.4}, {:.4}): {e}", f.a, f.b));
                monodromy.push(None);
            }
        }
        let v = volume_invariant(spec, *f)?;
        warnings.extend(v.warnings);
        volumes.push(v.value);
    }
    Ok(InverseReport {
        hbar: spec.hbar,
        hull: convex_hull(&pts),
        hausdorff_by_hbar: Vec::new(),
        mff_estimate: detection.estimates.len(),
        focus_estimates: detection.estimates,
        monodromy,
        volume_invariants: volumes,
        warnings,
    })
}

/// Joint spectrum of a built-in model inside `window`.
pub fn model_spectrum(model: &IntegrableModel, hbar: f64, window: &BaseBox) -> Result<JointSpectrum> {
    let (qp, blocks) = quantize(model, hbar, window)?;
    joint_spectrum(&blocks, &qp, window)
}

/// `d_H(conv(Σ_ħ ∩ window), conv(F(M) ∩ window))` for each ħ, and the
/// inverse report of the smallest ħ.
pub fn convergence_test(
    model: &IntegrableModel,
    hbars: &[f64],
    window: &BaseBox,
) -> Result<InverseReport> {
    if hbars.len() < 3 {
        return Err(Error::Parameter("a convergence sweep needs at least three ħ values".into()));
    }
    let image = classical_image(model, window, IMAGE_COLUMNS, IMAGE_SAMPLES)?;
    let mut sweep = Vec::new();
    let mut finest: Option<JointSpectrum> = None;
    for &h in hbars {
        let spec = model_spectrum(model, h, window)?;
        let pts: Vec<[f64; 2]> = spec.trusted().map(|p| [p.mu, p.lambda]).collect();
        sweep.push((h, hausdorff_distance(&convex_hull(&pts), &image.hull)));
        if finest.as_ref().is_none_or(|f| h < f.hbar) {
            finest = Some(spec);
        }
    }
    let mut report = invert(finest.as_ref().expect("non-empty sweep"))?;
    report.hausdorff_by_hbar = sweep;
    Ok(report)
}
