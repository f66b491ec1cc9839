//! Dormand–Prince 5(4) integrator with per-step projection.

use nalgebra::DVector;

use crate::error::{Error, Result};

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// Difference between the 5th and 4th order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Step-size control state after an accepted step.
#[derive(Clone, Debug)]
pub struct Accepted {
    pub t: f64,
    pub y: DVector<f64>,
    pub h: f64,
}

pub struct Dopri5<'a> {
    rhs: &'a (dyn Fn(&DVector<f64>) -> DVector<f64> + Sync),
    project: Option<&'a (dyn Fn(&mut DVector<f64>) + Sync)>,
    tol: f64,
    pub max_steps: usize,
}

impl<'a> Dopri5<'a> {
    pub fn new(rhs: &'a (dyn Fn(&DVector<f64>) -> DVector<f64> + Sync), tol: f64) -> Self {
        Self {
            rhs,
            project: None,
            tol,
            max_steps: 5_000_000,
        }
    }

    pub fn with_projection(mut self, project: &'a (dyn Fn(&mut DVector<f64>) + Sync)) -> Self {
        self.project = Some(project);
        self
    }

    /// One Runge–Kutta step of size `h` (possibly negative). Returns the
    /// 5th-order solution and the scaled error norm.
    pub fn try_step(&self, y: &DVector<f64>, h: f64) -> (DVector<f64>, f64) {
        let mut k: Vec<DVector<f64>> = Vec::with_capacity(7);
        k.push((self.rhs)(y));
        for s in 1..7 {
            let mut ys = y.clone();
            for (j, kj) in k.iter().enumerate() {
                let a = A[s][j];
                if a != 0.0 {
                    ys.axpy(h * a, kj, 1.0);
                }
            }
            if s == 6 {
                // FSAL stage: ys is the 5th-order solution.
                k.push((self.rhs)(&ys));
                let mut err = 0.0;
                for i in 0..y.len() {
                    let mut e = 0.0;
                    for (j, kj) in k.iter().enumerate() {
                        e += E[j] * kj[i];
                    }
                    let sc = self.tol + self.tol * y[i].abs().max(ys[i].abs());
                    err += (h * e / sc).powi(2);
                }
                let err = (err / y.len() as f64).sqrt();
                return (ys, err);
            }
            k.push((self.rhs)(&ys));
        }
        unreachable!()
    }

    /// Single step followed by projection, without error control.
    pub fn plain_step(&self, y: &DVector<f64>, h: f64) -> DVector<f64> {
        let (mut out, _) = self.try_step(y, h);
        if let Some(p) = self.project {
            p(&mut out);
        }
        out
    }

    fn initial_step(&self, duration: f64) -> f64 {
        let h = 0.1 * self.tol.powf(0.2);
        h.min(duration.abs()).max(1e-6_f64.min(duration.abs()))
    }

    /// Integrates over `duration` (which may be negative).
    pub fn integrate(&self, y0: &DVector<f64>, duration: f64) -> Result<DVector<f64>> {
        if duration == 0.0 {
            return Ok(y0.clone());
        }
        let mut last = None;
        self.run(y0, duration, |acc| {
            last = Some(acc.y.clone());
            true
        })?;
        Ok(last.unwrap_or_else(|| y0.clone()))
    }

    /// Integrates up to `t_end`, calling `observer` after each accepted
    /// step. Integration stops early when the observer returns `false`.
    /// Returns the final time reached.
    pub fn run<F>(&self, y0: &DVector<f64>, t_end: f64, mut observer: F) -> Result<f64>
    where
        F: FnMut(&Accepted) -> bool,
    {
        let dir = t_end.signum();
        let mut t = 0.0;
        let mut y = y0.clone();
        let mut h = self.initial_step(t_end) * dir;
        let mut steps = 0usize;
        while (t_end - t) * dir > 0.0 {
            if (t + h - t_end) * dir > 0.0 {
                h = t_end - t;
            }
            let (mut y_new, err) = self.try_step(&y, h);
            steps += 1;
            if steps > self.max_steps {
                return Err(Error::Integration {
                    t,
                    last: y.as_slice().to_vec(),
                });
            }
            if err.is_finite() && err <= 1.0 {
                if let Some(p) = self.project {
                    p(&mut y_new);
                }
                t += h;
                y = y_new;
                let fac = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                let accepted = Accepted { t, y: y.clone(), h };
                if !observer(&accepted) {
                    return Ok(t);
                }
                h *= fac;
                continue;
            } else if err.is_finite() {
                h *= (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
            } else {
                h *= 0.2;
            }
            if h.abs() < 1e-13 * t.abs().max(1.0) {
                return Err(Error::Integration {
                    t,
                    last: y.as_slice().to_vec(),
                });
            }
        }
        Ok(t)
    }
}
