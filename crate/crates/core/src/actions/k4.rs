//! Truncated Taylor series modulo constants and integer multiples of `a`,
//! with the Klein four-group action and its fundamental domain, in exact
//! rational arithmetic.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Element of `K₄ = ℤ/2 × ℤ/2`.
pub type K4 = (u8, u8);

pub const K4_ELEMENTS: [K4; 4] = [(0, 0), (1, 0), (0, 1), (1, 1)];

pub fn k4_compose(x: K4, y: K4) -> K4 {
    ((x.0 + y.0) % 2, (x.1 + y.1) % 2)
}

/// Series `Σ C_{i,j} aⁱ bʲ` truncated at total degree `degree`, without
/// constant term and with the `a`-coefficient reduced into `[0, 1)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TaylorSeries {
    pub degree: usize,
    coeffs: BTreeMap<(usize, usize), BigRational>,
}

fn frac_part(x: &BigRational) -> BigRational {
    x - x.floor()
}

impl TaylorSeries {
    pub fn zero(degree: usize) -> Self {
        Self {
            degree,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> BigRational {
        self.coeffs.get(&(i, j)).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigRational) {
        if i + j > self.degree || (i, j) == (0, 0) {
            return;
        }
        let v = if (i, j) == (1, 0) { frac_part(&v) } else { v };
        if v.is_zero() {
            self.coeffs.remove(&(i, j));
        } else {
            self.coeffs.insert((i, j), v);
        }
    }

    /// Sets a coefficient from a float, exactly.
    pub fn set_f64(&mut self, i: usize, j: usize, v: f64) {
        if let Some(r) = BigRational::from_float(v) {
            self.set(i, j, r);
        }
    }

    pub fn get_f64(&self, i: usize, j: usize) -> f64 {
        self.get(i, j).to_f64().unwrap_or(f64::NAN)
    }

    /// Nonzero coefficients in lexicographic order of `(i, j)`.
    pub fn terms(&self) -> impl Iterator<Item = (&(usize, usize), &BigRational)> {
        self.coeffs.iter()
    }

    pub fn normalized(&self) -> Self {
        let mut out = Self::zero(self.degree);
        for ((i, j), v) in &self.coeffs {
            out.set(*i, *j, v.clone());
        }
        out
    }
}

impl fmt::Display for TaylorSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .coeffs
            .iter()
            .map(|((i, j), v)| format!("({v})·a^{i}·b^{j}"))
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Serialized form: `{degree, coefficients: [{i, j, value}]}` with exact
/// values written as `"n/d"` strings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesJson {
    pub degree: usize,
    pub coefficients: Vec<CoefficientJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientJson {
    pub i: usize,
    pub j: usize,
    pub value: String,
}

/// Parses `"n/d"`, `"n"` or a decimal literal into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational number: {s:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    if let Ok(n) = s.parse::<BigInt>() {
        return Ok(BigRational::from_integer(n));
    }
    let x: f64 = s.parse().map_err(|_| bad())?;
    BigRational::from_float(x).ok_or_else(bad)
}

pub fn format_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl TaylorSeries {
    pub fn to_json(&self) -> SeriesJson {
        SeriesJson {
            degree: self.degree,
            coefficients: self
                .coeffs
                .iter()
                .map(|((i, j), v)| CoefficientJson {
                    i: *i,
                    j: *j,
                    value: format_rational(v),
                })
                .collect(),
        }
    }

    pub fn from_json(json: &SeriesJson) -> Result<Self> {
        let mut s = Self::zero(json.degree);
        for c in &json.coefficients {
            if c.i + c.j > json.degree {
                return Err(Error::Parse(format!(
                    "coefficient ({}, {}) exceeds degree {}",
                    c.i, c.j, json.degree
                )));
            }
            s.set(c.i, c.j, parse_rational(&c.value)?);
        }
        Ok(s)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let json: SeriesJson =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_json(&json)
    }
}

/// Right action `T ⋆ (j₁, j₂) = ε₂·T(ε₁a, ε₂b) + j₁a/2` with `εₖ = (−1)^{jₖ}`.
pub fn k4_act(series: &TaylorSeries, j: K4) -> TaylorSeries {
    let e1 = if j.0 % 2 == 1 { -1 } else { 1 };
    let e2 = if j.1 % 2 == 1 { -1 } else { 1 };
    let mut out = TaylorSeries::zero(series.degree);
    for ((i, k), v) in &series.coeffs {
        let sign = e2 * if i % 2 == 1 { e1 } else { 1 } * if k % 2 == 1 { e2 } else { 1 };
        out.set(*i, *k, v * BigRational::from_integer(BigInt::from(sign)));
    }
    if j.0 % 2 == 1 {
        let half = BigRational::new(BigInt::from(1), BigInt::from(2));
        out.set(1, 0, out.get(1, 0) + half);
    }
    out
}

fn first_nonzero<F: Fn(usize, usize) -> bool>(
    s: &TaylorSeries,
    admissible: F,
) -> Option<((usize, usize), BigRational)> {
    s.coeffs
        .iter()
        .find(|((i, j), _)| admissible(*i, *j))
        .map(|(k, v)| (*k, v.clone()))
}

/// Representative of the K₄-orbit in the fundamental domain, with the group
/// element that maps the input onto it.
pub fn k4_canonical(series: &TaylorSeries) -> Result<(TaylorSeries, K4)> {
    let s = series.normalized();
    let quarter = BigRational::new(BigInt::from(1), BigInt::from(4));
    let c = s.get(1, 0);
    let four_c = frac_part(&(&c * BigRational::from_integer(BigInt::from(4))));
    if !four_c.is_zero() {
        for j in K4_ELEMENTS {
            let t = k4_act(&s, j);
            let a = t.get(1, 0);
            if a.is_positive() && a < quarter {
                return Ok((t, j));
            }
        }
        unreachable!("exactly one orbit element has a-coefficient in (0, 1/4)");
    }
    let target = if c.is_zero() || c == BigRational::new(BigInt::from(1), BigInt::from(2)) {
        BigRational::zero()
    } else {
        quarter
    };
    let candidates: Vec<(TaylorSeries, K4)> = K4_ELEMENTS
        .iter()
        .map(|j| (k4_act(&s, *j), *j))
        .filter(|(t, _)| t.get(1, 0) == target)
        .collect();
    // Rule (ii): even powers of b; rule (iii): odd powers of a. In the
    // lexicographic order the first candidate index is only decidable when
    // its first exponent is the smallest admissible one, since indices
    // with that exponent precede all others and are finitely many below it.
    let (admissible, min_first): (Box<dyn Fn(usize, usize) -> bool>, usize) = if target.is_zero()
    {
        (Box::new(|_i, j| j % 2 == 0), 0)
    } else {
        (Box::new(|i, j| i % 2 == 1 && (i, j) != (1, 0)), 1)
    };
    for (t, j) in &candidates {
        match first_nonzero(t, &admissible) {
            Some(((i, _), v)) if i == min_first => {
                if v.is_positive() {
                    return Ok((t.clone(), *j));
                }
            }
            _ => {
                return Err(Error::UndecidableAtDegree {
                    degree: series.degree,
                })
            }
        }
    }
    unreachable!("the two candidates have opposite leading signs")
}
