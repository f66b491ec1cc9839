//! Classical and quantum invariants of two-degree-of-freedom integrable
//! systems: singularities, period lattices, actions, monodromy, semi-toric
//! polygons, Duistermaat–Heckman functions and joint spectra, plus recovery
//! of classical data from spectra.

pub mod error;
pub mod models;
pub(crate) mod numerics;
pub mod ode;
pub mod singularities;
pub mod actions;
pub mod cartography;
pub mod quantum;
pub mod inverse;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub use models::{ChartPoint, IntegrableModel, MomentValue, Observable, TangentVector};
