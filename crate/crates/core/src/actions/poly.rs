//! Truncated bivariate polynomials in `(a, b)`.

/// Monomials `aⁱbʲ` with `i + j ≤ degree`, graded then by decreasing `i`.
pub fn monomials(degree: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for d in 0..=degree {
        for i in (0..=d).rev() {
            out.push((i, d - i));
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    pub degree: usize,
    /// Coefficients in the order of [`monomials`].
    pub coeffs: Vec<f64>,
}

impl Poly {
    pub fn zero(degree: usize) -> Self {
        Self {
            degree,
            coeffs: vec![0.0; monomials(degree).len()],
        }
    }

    fn index(i: usize, j: usize) -> usize {
        let d = i + j;
        d * (d + 1) / 2 + (d - i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i + j > self.degree {
            0.0
        } else {
            self.coeffs[Self::index(i, j)]
        }
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        if i + j <= self.degree {
            self.coeffs[Self::index(i, j)] = v;
        }
    }

    pub fn eval(&self, a: f64, b: f64) -> f64 {
        monomials(self.degree)
            .iter()
            .zip(&self.coeffs)
            .map(|((i, j), c)| c * a.powi(*i as i32) * b.powi(*j as i32))
            .sum()
    }

    pub fn d_a(&self, a: f64, b: f64) -> f64 {
        monomials(self.degree)
            .iter()
            .zip(&self.coeffs)
            .filter(|((i, _), _)| *i > 0)
            .map(|((i, j), c)| c * *i as f64 * a.powi(*i as i32 - 1) * b.powi(*j as i32))
            .sum()
    }

    pub fn d_b(&self, a: f64, b: f64) -> f64 {
        monomials(self.degree)
            .iter()
            .zip(&self.coeffs)
            .filter(|((_, j), _)| *j > 0)
            .map(|((i, j), c)| c * *j as f64 * a.powi(*i as i32) * b.powi(*j as i32 - 1))
            .sum()
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero(self.degree);
        for (i, j) in monomials(self.degree) {
            out.set(i, j, self.get(i, j) + other.get(i, j));
        }
        out
    }

    pub fn scale(&self, s: f64) -> Poly {
        Poly {
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    /// Product truncated to `self.degree`.
    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero(self.degree);
        for (i1, j1) in monomials(self.degree) {
            let c1 = self.get(i1, j1);
            if c1 == 0.0 {
                continue;
            }
            for (i2, j2) in monomials(self.degree - i1 - j1) {
                let c2 = other.get(i2, j2);
                let (i, j) = (i1 + i2, j1 + j2);
                out.set(i, j, out.get(i, j) + c1 * c2);
            }
        }
        out
    }

    /// `self(x(a,b), y(a,b))` truncated to `self.degree`, for `x`, `y`
    /// without constant terms.
    pub fn compose(&self, x: &Poly, y: &Poly) -> Poly {
        let deg = self.degree;
        let mut one = Poly::zero(deg);
        one.set(0, 0, 1.0);
        let mut xp = vec![one.clone()];
        let mut yp = vec![one];
        for k in 1..=deg {
            xp.push(xp[k - 1].mul(x));
            yp.push(yp[k - 1].mul(y));
        }
        let mut out = Poly::zero(deg);
        for (i, j) in monomials(deg) {
            let c = self.get(i, j);
            if c != 0.0 {
                out = out.add(&xp[i].mul(&yp[j]).scale(c));
            }
        }
        out
    }

    /// Solves `self(a, b) = β` for `b` as a series in `(a, β)`, given
    /// `self(0,0) = 0` and `∂_b self(0,0) ≠ 0`.
    pub fn invert_in_b(&self) -> Poly {
        let deg = self.degree;
        let d01 = self.get(0, 1);
        let mut a_var = Poly::zero(deg);
        a_var.set(1, 0, 1.0);
        let mut beta = Poly::zero(deg);
        beta.set(0, 1, 1.0);
        // b = (β − (self(a,b) − d01·b)) / d01, iterated to order `deg`.
        let mut rest = self.clone();
        rest.set(0, 1, 0.0);
        rest.set(0, 0, 0.0);
        let mut b = beta.scale(1.0 / d01);
        for _ in 0..=deg {
            let r = rest.compose(&a_var, &b);
            b = beta.add(&r.scale(-1.0)).scale(1.0 / d01);
        }
        b
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inversion_round_trips() {
        let mut p = Poly::zero(4);
        p.set(0, 1, 1.5);
        p.set(1, 0, 0.3);
        p.set(0, 2, -0.4);
        p.set(1, 1, 0.2);
        p.set(2, 1, 0.7);
        let inv = p.invert_in_b();
        let (a, beta) = (0.01, -0.02);
        let b = inv.eval(a, beta);
        assert!((p.eval(a, b) - beta).abs() < 1e-9);
    }
}
