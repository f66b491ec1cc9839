use std::collections::HashMap;

use nalgebra::DVector;
use num_complex::Complex64;

use super::blocks::{raising, OperatorBlock, QuantizationParams};
use crate::error::{Error, Result};

const POWER_ITERATIONS: usize = 500;

/// Operator stored as a list of `(row, col, value)` entries; repeated
/// positions add up.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator {
    pub dim: usize,
    pub entries: Vec<(usize, usize, Complex64)>,
}

impl SparseOperator {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, value: Complex64) {
        assert!(row < self.dim && col < self.dim, "entry outside the operator");
        if value != Complex64::new(0.0, 0.0) {
            self.entries.push((row, col, value));
        }
    }

    pub fn add(&self, other: &SparseOperator, scale: f64) -> SparseOperator {
        assert_eq!(self.dim, other.dim);
        let mut out = self.clone();
        out.entries
            .extend(other.entries.iter().map(|(r, c, v)| (*r, *c, v * scale)));
        out
    }

    fn accumulate(&self) -> HashMap<(usize, usize), Complex64> {
        let mut m = HashMap::with_capacity(self.entries.len());
        for (r, c, v) in &self.entries {
            *m.entry((*r, *c)).or_insert(Complex64::new(0.0, 0.0)) += v;
        }
        m
    }

    pub fn mul_vec(&self, x: &DVector<Complex64>) -> DVector<Complex64> {
        let mut y = DVector::zeros(self.dim);
        for (r, c, v) in &self.entries {
            y[*r] += v * x[*c];
        }
        y
    }

    fn adjoint_mul_vec(&self, x: &DVector<Complex64>) -> DVector<Complex64> {
        let mut y = DVector::zeros(self.dim);
        for (r, c, v) in &self.entries {
            y[*c] += v.conj() * x[*r];
        }
        y
    }

    /// `⟨ψ|A|ψ⟩`.
    pub fn expectation(&self, psi: &DVector<Complex64>) -> Complex64 {
        psi.dotc(&self.mul_vec(psi))
    }

    /// Keeps the basis states selected by `mask`, renumbered in order.
    pub fn restrict(&self, mask: &[bool]) -> SparseOperator {
        assert_eq!(mask.len(), self.dim);
        let mut index = vec![usize::MAX; self.dim];
        let mut n = 0;
        for (i, keep) in mask.iter().enumerate() {
            if *keep {
                index[i] = n;
                n += 1;
            }
        }
        SparseOperator {
            dim: n,
            entries: self
                .entries
                .iter()
                .filter(|(r, c, _)| mask[*r] && mask[*c])
                .map(|(r, c, v)| (index[*r], index[*c], *v))
                .collect(),
        }
    }

    pub fn frobenius(&self) -> f64 {
        self.accumulate().values().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Spectral norm by power iteration on `A†A`; the estimate approaches the
    /// true norm from below.
    pub fn spectral_norm(&self) -> f64 {
        if self.dim == 0 || self.entries.is_empty() {
            return 0.0;
        }
        let mut x = DVector::from_fn(self.dim, |i, _| {
            Complex64::new(1.0 + 0.3 * (i as f64).sin(), 0.1 * (i as f64).cos())
        });
        x /= Complex64::new(x.norm(), 0.0);
        let mut estimate = 0.0;
        for _ in 0..POWER_ITERATIONS {
            let y = self.adjoint_mul_vec(&self.mul_vec(&x));
            let n = y.norm();
            if n == 0.0 {
                return 0.0;
            }
            let next = n.sqrt();
            x = y / Complex64::new(n, 0.0);
            if (next - estimate).abs() <= 1e-13 * next {
                return next;
            }
            estimate = next;
        }
        estimate
    }

    pub fn product(&self, other: &SparseOperator) -> SparseOperator {
        assert_eq!(self.dim, other.dim);
        let mut by_row: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); other.dim];
        for ((r, c), v) in other.accumulate() {
            by_row[r].push((c, v));
        }
        let mut acc: HashMap<(usize, usize), Complex64> = HashMap::new();
        for ((r, k), v) in self.accumulate() {
            for (c, w) in &by_row[k] {
                *acc.entry((r, *c)).or_insert(Complex64::new(0.0, 0.0)) += v * w;
            }
        }
        let mut entries: Vec<_> = acc.into_iter().map(|((r, c), v)| (r, c, v)).collect();
        entries.sort_by_key(|(r, c, _)| (*r, *c));
        SparseOperator {
            dim: self.dim,
            entries,
        }
    }
}

/// `‖[A, B]‖_F / (‖A‖₂ ‖B‖₂)`; the Frobenius numerator bounds the operator
/// norm from above.
pub fn commutator_ratio(a: &SparseOperator, b: &SparseOperator) -> f64 {
    let denom = a.spectral_norm() * b.spectral_norm();
    if denom == 0.0 {
        return 0.0;
    }
    let comm = a.product(b).add(&b.product(a), -1.0);
    comm.frobenius() / denom
}

/// Assembles `Ĵ` and `Ĥ` block-diagonally over the untainted blocks.
pub fn assemble_blocks(blocks: &[OperatorBlock]) -> (SparseOperator, SparseOperator) {
    let inner: Vec<&OperatorBlock> = blocks.iter().filter(|b| !b.tainted).collect();
    let dim = inner.iter().map(|b| b.dim()).sum();
    let mut j = SparseOperator::new(dim);
    let mut h = SparseOperator::new(dim);
    let mut offset = 0;
    for b in inner {
        for r in 0..b.dim() {
            j.push(offset + r, offset + r, Complex64::new(b.j_value, 0.0));
            for c in 0..b.dim() {
                h.push(offset + r, offset + c, b.matrix[(r, c)]);
            }
        }
        offset += b.dim();
    }
    (j, h)
}

pub fn check_commutation(blocks: &[OperatorBlock]) -> f64 {
    let (j, h) = assemble_blocks(blocks);
    commutator_ratio(&j, &h)
}

/// Full truncated space of the Jaynes–Cummings model.
#[derive(Clone, Debug)]
pub struct JcSpace {
    pub j_op: SparseOperator,
    pub h_op: SparseOperator,
    /// States with `n < n_max`.
    pub interior: Vec<bool>,
    spin_dim: usize,
}

impl JcSpace {
    pub fn index(&self, n: usize, s: usize) -> usize {
        n * self.spin_dim + s
    }
}

/// `Ĵ` and `Ĥ` on `|n, m_s⟩`, `n ≤ n_max`, built directly from the ladder
/// operators rather than from the blocks.
pub fn jc_space(qp: &QuantizationParams) -> Result<JcSpace> {
    if qp.spin_j < 0.5 || qp.n_max < 1 {
        return Err(Error::Parameter("Jaynes–Cummings parameters not set".into()));
    }
    let h = qp.hbar;
    let j = qp.spin_j;
    let sd = qp.spin_dim();
    let dim = sd * (qp.n_max + 1);
    let mut j_op = SparseOperator::new(dim);
    let mut h_op = SparseOperator::new(dim);
    let coupling = 0.5 * (0.5 * h).sqrt();
    let idx = |n: usize, s: usize| n * sd + s;
    for n in 0..=qp.n_max {
        for s in 0..sd {
            let m = s as f64 - j;
            j_op.push(idx(n, s), idx(n, s), Complex64::new(h * (n as f64 + 0.5) + h * m, 0.0));
            // â ŝ₊ |n, m⟩ = √n ħ c₊(m) |n-1, m+1⟩ and its adjoint.
            if n > 0 && s + 1 < sd {
                let v = coupling * (n as f64).sqrt() * h * raising(j, m);
                h_op.push(idx(n - 1, s + 1), idx(n, s), Complex64::new(v, 0.0));
                h_op.push(idx(n, s), idx(n - 1, s + 1), Complex64::new(v, 0.0));
            }
        }
    }
    let interior = (0..dim).map(|i| i / sd < qp.n_max).collect();
    Ok(JcSpace {
        j_op,
        h_op,
        interior,
        spin_dim: sd,
    })
}

/// Commutator ratio of the Jaynes–Cummings operators on the truncation
/// interior.
pub fn jc_commutation(qp: &QuantizationParams) -> Result<f64> {
    let space = jc_space(qp)?;
    Ok(commutator_ratio(
        &space.j_op.restrict(&space.interior),
        &space.h_op.restrict(&space.interior),
    ))
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Product of an oscillator coherent state centred at `(u, v)` and a spin
/// coherent state pointing along the unit vector `(x, y, z)`, normalized
/// within the truncation. The point is `[x, y, z, u, v]`.
pub fn jc_coherent_state(qp: &QuantizationParams, point: &[f64; 5]) -> Result<DVector<Complex64>> {
    let space = jc_space(qp)?;
    let [x, y, z, u, v] = *point;
    let h = qp.hbar;
    let alpha = Complex64::new(u, -v) / (2.0 * h).sqrt();
    let sd = qp.spin_dim();
    let two_j = sd - 1;
    let theta = z.clamp(-1.0, 1.0).acos();
    let phi = y.atan2(x);
    let (c, s) = ((0.5 * theta).cos(), (0.5 * theta).sin());
    let spin: Vec<Complex64> = (0..sd)
        .map(|k| {
            // k = j + m
            let ln_binom = ln_factorial(two_j) - ln_factorial(k) - ln_factorial(two_j - k);
            let mag = (0.5 * ln_binom).exp() * c.powi(k as i32) * s.powi((two_j - k) as i32);
            let m = k as f64 - qp.spin_j;
            Complex64::from_polar(mag, -m * phi)
        })
        .collect();
    let osc: Vec<Complex64> = (0..=qp.n_max)
        .map(|n| {
            if alpha.norm() == 0.0 {
                return Complex64::new(if n == 0 { 1.0 } else { 0.0 }, 0.0);
            }
            let ln_mag = n as f64 * alpha.norm().ln() - 0.5 * ln_factorial(n) - 0.5 * alpha.norm_sqr();
            Complex64::from_polar(ln_mag.exp(), n as f64 * alpha.arg())
        })
        .collect();
    let mut psi = DVector::zeros(space.j_op.dim);
    for (n, a) in osc.iter().enumerate() {
        for (k, b) in spin.iter().enumerate() {
            psi[space.index(n, k)] = a * b;
        }
    }
    let norm = psi.norm();
    Ok(psi / Complex64::new(norm, 0.0))
}
