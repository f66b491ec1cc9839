use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Truncation and scale parameters for the quantized models.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantizationParams {
    pub hbar: f64,
    /// Largest angular momentum kept for the pendulum.
    pub l_max: usize,
    /// Spin of the Jaynes–Cummings model, a positive half-integer.
    pub spin_j: f64,
    /// Oscillator cutoff of the Jaynes–Cummings model.
    pub n_max: usize,
    /// Fraction of the truncation range excluded from the trust window.
    pub trust_layer: f64,
}

impl QuantizationParams {
    pub fn pendulum(hbar: f64, l_max: usize) -> Result<Self> {
        let qp = Self {
            hbar,
            l_max,
            spin_j: 0.0,
            n_max: 0,
            trust_layer: 0.2,
        };
        qp.check_hbar()?;
        Ok(qp)
    }

    /// Only `ħ`, for models quantized without truncation.
    pub fn exact(hbar: f64) -> Result<Self> {
        let qp = Self {
            hbar,
            l_max: 0,
            spin_j: 0.0,
            n_max: 0,
            trust_layer: 0.0,
        };
        qp.check_hbar()?;
        Ok(qp)
    }

    /// `ħ = 1/(j + ½)`.
    pub fn jaynes_cummings(spin_j: f64, n_max: usize) -> Result<Self> {
        let twice = 2.0 * spin_j;
        if !(spin_j >= 0.5) || (twice - twice.round()).abs() > 1e-12 {
            return Err(Error::Parameter(format!(
                "spin j = {spin_j} is not a positive half-integer"
            )));
        }
        if n_max < 1 {
            return Err(Error::Parameter("oscillator cutoff must be positive".into()));
        }
        Ok(Self {
            hbar: 1.0 / (spin_j + 0.5),
            l_max: 0,
            spin_j: twice.round() / 2.0,
            n_max,
            trust_layer: 0.2,
        })
    }

    /// Jaynes–Cummings parameters for a given `ħ`, which must be `1/(j + ½)`.
    pub fn jaynes_cummings_at(hbar: f64, n_max: usize) -> Result<Self> {
        let j = 1.0 / hbar - 0.5;
        let twice = (2.0 * j).round();
        if (2.0 * j - twice).abs() > 1e-9 {
            return Err(Error::Parameter(format!(
                "ħ = {hbar} is not of the form 1/(j + ½)"
            )));
        }
        Self::jaynes_cummings(twice / 2.0, n_max)
    }

    pub fn with_trust_layer(mut self, fraction: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&fraction) {
            return Err(Error::Parameter("trust layer must lie in [0, 1)".into()));
        }
        self.trust_layer = fraction;
        Ok(self)
    }

    fn check_hbar(&self) -> Result<()> {
        if !(self.hbar > 0.0 && self.hbar <= 1.0) {
            return Err(Error::Parameter(format!("ħ = {} outside (0, 1]", self.hbar)));
        }
        Ok(())
    }

    /// Number of spin states, `2j + 1`.
    pub fn spin_dim(&self) -> usize {
        (2.0 * self.spin_j).round() as usize + 1
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum BasisDescriptor {
    /// `Y_l^m` for `l = l_min..=l_max`.
    SphericalHarmonics { m: i64, l_min: usize, l_max: usize },
    /// `|n, m_s⟩` product states, ordered by increasing `m_s`.
    SpinOscillator { states: Vec<(usize, f64)> },
    /// `|m₁, m₂⟩` spin product states with `m₁` fixed.
    SpinProduct { m1: f64, m2: Vec<f64> },
}

/// One joint eigenspace of `Ĵ` with the restriction of `Ĥ` to it.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorBlock {
    /// `m` for the pendulum, `n + m_s + j` for Jaynes–Cummings.
    pub label: i64,
    pub j_value: f64,
    pub matrix: DMatrix<Complex64>,
    pub basis: BasisDescriptor,
    /// Number of lowest eigenvalues unaffected by the truncation.
    pub trusted: usize,
    /// The block lost states to the truncation.
    pub tainted: bool,
}

impl OperatorBlock {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

fn tridiagonal(d: &[f64], e: &[f64]) -> DMatrix<Complex64> {
    let n = d.len();
    DMatrix::from_fn(n, n, |r, c| {
        let v = if r == c {
            d[r]
        } else if r == c + 1 {
            e[c]
        } else if c == r + 1 {
            e[r]
        } else {
            0.0
        };
        Complex64::new(v, 0.0)
    })
}

/// `⟨Y_{l+1}^m | cos θ | Y_l^m⟩`.
pub fn x3_element(l: usize, m: i64) -> f64 {
    let l = l as f64;
    let m = m as f64;
    (((l + 1.0).powi(2) - m * m) / ((2.0 * l + 1.0) * (2.0 * l + 3.0))).sqrt()
}

/// `Ĥ = -(ħ²/2)Δ + x₃` and `Ĵ = ħ m` on spherical harmonics up to `l_max`.
pub fn build_pendulum_blocks(qp: &QuantizationParams) -> Result<Vec<OperatorBlock>> {
    qp.check_hbar()?;
    let big_l = qp.l_max as i64;
    let h = qp.hbar;
    let trusted_l = ((1.0 - qp.trust_layer) * qp.l_max as f64).floor() as i64;
    Ok((-big_l..=big_l)
        .map(|m| {
            let l_min = m.unsigned_abs() as usize;
            let d: Vec<f64> = (l_min..=qp.l_max)
                .map(|l| 0.5 * h * h * (l * (l + 1)) as f64)
                .collect();
            let e: Vec<f64> = (l_min..qp.l_max).map(|l| x3_element(l, m)).collect();
            let dim = d.len();
            OperatorBlock {
                label: m,
                j_value: h * m as f64,
                matrix: tridiagonal(&d, &e),
                basis: BasisDescriptor::SphericalHarmonics {
                    m,
                    l_min,
                    l_max: qp.l_max,
                },
                trusted: (trusted_l - m.abs() + 1).clamp(0, dim as i64) as usize,
                tainted: false,
            }
        })
        .collect())
}

/// Standard `⟨m+1|S₊|m⟩` for spin `j`.
pub(crate) fn raising(j: f64, m: f64) -> f64 {
    (j * (j + 1.0) - m * (m + 1.0)).max(0.0).sqrt()
}

/// Spin-`j` ⊗ oscillator with `Ĵ = ħ(N̂ + ½) + ŝ_z` and
/// `Ĥ = ½√(ħ/2)(â ŝ₊ + â† ŝ₋)`, `ŝ = ħ S`. Blocks are labelled by the
/// total excitation `k = n + m_s + j`; blocks with `k > n_max` miss states
/// and are flagged as tainted.
pub fn build_jc_blocks(qp: &QuantizationParams) -> Result<Vec<OperatorBlock>> {
    if qp.spin_j < 0.5 || qp.n_max < 1 {
        return Err(Error::Parameter("Jaynes–Cummings parameters not set".into()));
    }
    let h = qp.hbar;
    let j = qp.spin_j;
    let twice_j = qp.spin_dim() - 1;
    let coupling = 0.5 * (0.5 * h).sqrt() * h;
    let trusted_k = ((1.0 - qp.trust_layer) * qp.n_max as f64).floor() as usize;
    let mut blocks = Vec::new();
    for k in 0..=qp.n_max + twice_j {
        // m_s + j = s ranges over 0..=2j with n = k - s in 0..=n_max.
        let states: Vec<(usize, f64)> = (0..=twice_j.min(k))
            .filter(|s| k - s <= qp.n_max)
            .map(|s| (k - s, s as f64 - j))
            .collect();
        let d = vec![0.0; states.len()];
        let e: Vec<f64> = states
            .windows(2)
            .map(|w| {
                let (n, m) = w[0];
                coupling * (n as f64).sqrt() * raising(j, m)
            })
            .collect();
        let tainted = k > qp.n_max;
        blocks.push(OperatorBlock {
            label: k as i64,
            j_value: h * (k as f64 - j + 0.5),
            matrix: tridiagonal(&d, &e),
            trusted: if tainted || k > trusted_k { 0 } else { states.len() },
            basis: BasisDescriptor::SpinOscillator { states },
            tainted,
        });
    }
    Ok(blocks)
}

/// Two spins with `ħ(j_i + ½) = r_i`, `Ĵ = ŝ_z ⊗ 1`, `Ĥ = 1 ⊗ ŝ_z`.
pub fn build_toric_blocks(qp: &QuantizationParams, r1: f64, r2: f64) -> Result<Vec<OperatorBlock>> {
    qp.check_hbar()?;
    let hbar = qp.hbar;
    let spin = |r: f64| -> Result<usize> {
        let twice = 2.0 * (r / hbar - 0.5);
        if twice < 0.0 || (twice - twice.round()).abs() > 1e-9 {
            return Err(Error::Parameter(format!(
                "radius {r} is not ħ(j + ½) for ħ = {hbar}"
            )));
        }
        Ok(twice.round() as usize)
    };
    let (t1, t2) = (spin(r1)?, spin(r2)?);
    let (j1, j2) = (t1 as f64 / 2.0, t2 as f64 / 2.0);
    let m2: Vec<f64> = (0..=t2).map(|s| s as f64 - j2).collect();
    let d: Vec<f64> = m2.iter().map(|m| hbar * m).collect();
    let e = vec![0.0; t2];
    Ok((0..=t1)
        .map(|s| {
            let m1 = s as f64 - j1;
            OperatorBlock {
                label: s as i64,
                j_value: hbar * m1,
                matrix: tridiagonal(&d, &e),
                basis: BasisDescriptor::SpinProduct {
                    m1,
                    m2: m2.clone(),
                },
                trusted: t2 + 1,
                tainted: false,
            }
        })
        .collect())
}

/// Quantization of a built-in model at `ħ`, with truncations large enough
/// that the trust window covers `window`.
pub fn quantize(
    model: &crate::models::IntegrableModel,
    hbar: f64,
    window: &crate::singularities::BaseBox,
) -> Result<(QuantizationParams, Vec<OperatorBlock>)> {
    use crate::models::System;
    match *model.system() {
        System::SphericalPendulum => {
            let reach = (2.0 * (window.b_hi + 1.0)).max(0.0).sqrt().max(window.a_lo.abs().max(window.a_hi.abs()));
            let l_max = ((reach / hbar + 5.0) / 0.8).ceil() as usize;
            let qp = QuantizationParams::pendulum(hbar, l_max)?;
            let blocks = build_pendulum_blocks(&qp)?;
            Ok((qp, blocks))
        }
        System::SpinOscillator => {
            let j = 1.0 / hbar - 0.5;
            let n_max = (((window.a_hi.max(-1.0) + 1.0) / hbar + j + 5.0) / 0.8).ceil() as usize;
            let qp = QuantizationParams::jaynes_cummings_at(hbar, n_max)?;
            let blocks = build_jc_blocks(&qp)?;
            Ok((qp, blocks))
        }
        System::ToricProduct { r1, r2 } => {
            let qp = QuantizationParams::exact(hbar)?;
            let blocks = build_toric_blocks(&qp, r1, r2)?;
            Ok((qp, blocks))
        }
        _ => Err(Error::Parameter(format!(
            "no quantization implemented for {}",
            model.name()
        ))),
    }
}
