use nalgebra::DVector;

use super::{ChartPoint, IntegrableModel, Observable};
use crate::error::Result;
use crate::ode::Dopri5;

/// Local error target relative to the requested tolerance. Keeping the
/// per-step error two orders below `tol` keeps the accumulated error of
/// moderate-length flows within `tol`.
const LOCAL_FACTOR: f64 = 1e-2;

pub fn flow_raw(
    model: &IntegrableModel,
    which: Observable,
    p: &DVector<f64>,
    duration: f64,
    tol: f64,
) -> Result<DVector<f64>> {
    let rhs = |y: &DVector<f64>| model.vector_field(which, y);
    let project = |y: &mut DVector<f64>| model.project(y);
    Dopri5::new(&rhs, tol * LOCAL_FACTOR)
        .with_projection(&project)
        .integrate(p, duration)
}

/// Flow of the Hamiltonian vector field of `which` for time `duration`.
pub fn flow(
    model: &IntegrableModel,
    which: Observable,
    p: &ChartPoint,
    duration: f64,
    tol: f64,
) -> Result<ChartPoint> {
    let v = model.check_point(p)?;
    let out = flow_raw(model, which, &v, duration, tol)?;
    Ok(model.point_from(&out))
}
