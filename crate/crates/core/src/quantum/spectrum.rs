use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::blocks::{BasisDescriptor, OperatorBlock, QuantizationParams};
use super::eigen::eigensolve;
use crate::error::{Error, Result};
use crate::singularities::BaseBox;

/// Collision tolerance for merging joint eigenvalues.
pub const MERGE_TOL: f64 = 1e-10;
const SOLVER_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralPoint {
    pub mu: f64,
    pub lambda: f64,
    pub multiplicity: u32,
    /// Clear of the truncation boundary layer.
    pub trusted: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    pub description: String,
    pub trust_layer: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointSpectrum {
    pub hbar: f64,
    /// Sorted by `(mu, lambda)`.
    pub points: Vec<SpectralPoint>,
    pub truncation: Truncation,
    pub window: BaseBox,
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    hbar: f64,
    mu: f64,
    lambda: f64,
    multiplicity: u32,
    #[serde(default = "default_trusted")]
    trusted: u8,
}

fn default_trusted() -> u8 {
    1
}

impl JointSpectrum {
    pub fn trusted(&self) -> impl Iterator<Item = &SpectralPoint> {
        self.points.iter().filter(|p| p.trusted)
    }

    /// Total count including multiplicities.
    pub fn count(&self) -> usize {
        self.points.iter().map(|p| p.multiplicity as usize).sum()
    }

    /// Columns `hbar,mu,lambda,multiplicity,trusted`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for p in &self.points {
            w.serialize(CsvRow {
                hbar: self.hbar,
                mu: p.mu,
                lambda: p.lambda,
                multiplicity: p.multiplicity,
                trusted: p.trusted as u8,
            })
            .expect("in-memory CSV write");
        }
        String::from_utf8(w.into_inner().expect("in-memory CSV flush")).expect("CSV is UTF-8")
    }

    /// Reads the CSV layout of [`JointSpectrum::to_csv`]; the `trusted`
    /// column is optional and defaults to 1. The window is the bounding box.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut hbar: Option<f64> = None;
        let mut points = Vec::new();
        for (line, row) in r.deserialize::<CsvRow>().enumerate() {
            let row = row.map_err(|e| Error::Parse(format!("spectrum CSV: {e}")))?;
            if !(row.hbar.is_finite() && row.mu.is_finite() && row.lambda.is_finite()) {
                return Err(Error::Parse(format!("spectrum CSV row {}: non-finite value", line + 1)));
            }
            if row.multiplicity == 0 || row.trusted > 1 {
                return Err(Error::Parse(format!(
                    "spectrum CSV row {}: multiplicity must be ≥ 1 and trusted 0 or 1",
                    line + 1
                )));
            }
            match hbar {
                None => hbar = Some(row.hbar),
                Some(h) if h != row.hbar => {
                    return Err(Error::Parse(format!(
                        "spectrum CSV row {}: mixed ħ values",
                        line + 1
                    )));
                }
                _ => {}
            }
            points.push(SpectralPoint {
                mu: row.mu,
                lambda: row.lambda,
                multiplicity: row.multiplicity,
                trusted: row.trusted == 1,
            });
        }
        let hbar = hbar.ok_or_else(|| Error::Parse("spectrum CSV has no rows".into()))?;
        if !(hbar > 0.0 && hbar <= 1.0) {
            return Err(Error::Parse(format!("ħ = {hbar} outside (0, 1]")));
        }
        let points = merge(points);
        let window = BaseBox {
            a_lo: points.iter().map(|p| p.mu).fold(f64::INFINITY, f64::min),
            a_hi: points.iter().map(|p| p.mu).fold(f64::NEG_INFINITY, f64::max),
            b_lo: points.iter().map(|p| p.lambda).fold(f64::INFINITY, f64::min),
            b_hi: points.iter().map(|p| p.lambda).fold(f64::NEG_INFINITY, f64::max),
        };
        Ok(Self {
            hbar,
            points,
            truncation: Truncation {
                description: "read from CSV".into(),
                trust_layer: 0.0,
            },
            window,
        })
    }
}

fn merge(mut raw: Vec<SpectralPoint>) -> Vec<SpectralPoint> {
    raw.sort_by(|p, q| p.mu.total_cmp(&q.mu).then(p.lambda.total_cmp(&q.lambda)));
    let mut out: Vec<SpectralPoint> = Vec::with_capacity(raw.len());
    for p in raw {
        match out.last_mut() {
            Some(q) if (p.mu - q.mu).abs() <= MERGE_TOL && (p.lambda - q.lambda).abs() <= MERGE_TOL => {
                q.multiplicity += p.multiplicity;
                q.trusted &= p.trusted;
            }
            _ => out.push(p),
        }
    }
    out
}

/// All `(Ĵ value, Ĥ eigenvalue)` pairs inside `window`, merged with
/// multiplicities. Blocks are diagonalized in parallel.
pub fn joint_spectrum(
    blocks: &[OperatorBlock],
    qp: &QuantizationParams,
    window: &BaseBox,
) -> Result<JointSpectrum> {
    let per_block: Vec<Vec<SpectralPoint>> = blocks
        .par_iter()
        .filter(|b| b.j_value >= window.a_lo && b.j_value <= window.a_hi)
        .map(|b| {
            let sys = eigensolve(b, SOLVER_TOL, false)?;
            Ok(sys
                .values
                .iter()
                .enumerate()
                .filter(|(_, l)| **l >= window.b_lo && **l <= window.b_hi)
                .map(|(i, l)| SpectralPoint {
                    mu: b.j_value,
                    lambda: *l,
                    multiplicity: 1,
                    trusted: i < b.trusted,
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let description = match blocks.first().map(|b| &b.basis) {
        Some(BasisDescriptor::SphericalHarmonics { l_max, .. }) => format!("l ≤ {l_max}"),
        Some(BasisDescriptor::SpinOscillator { .. }) => {
            let k = blocks.iter().filter(|b| !b.tainted).count();
            format!("{k} complete excitation blocks")
        }
        Some(BasisDescriptor::SpinProduct { .. }) => "exact".into(),
        None => "empty".into(),
    };
    Ok(JointSpectrum {
        hbar: qp.hbar,
        points: merge(per_block.into_iter().flatten().collect()),
        truncation: Truncation {
            description,
            trust_layer: qp.trust_layer,
        },
        window: *window,
    })
}
