//! Period lattices, action integrals, classical monodromy, the regularized
//! action at a focus-focus value and the K₄ algebra on its Taylor series.

mod chart;
mod k4;
mod monodromy;
mod period;
pub mod poly;
mod regularized;

pub use chart::{action_integrals, ActionChart};
pub use k4::{
    format_rational, k4_act, k4_canonical, k4_compose, parse_rational, CoefficientJson,
    SeriesJson, TaylorSeries, K4, K4_ELEMENTS,
};
pub(crate) use monodromy::transport_path;
pub use monodromy::{classical_monodromy, rectangle_loop, MonodromyMatrix};
pub use period::{fiber_seed, period_basis, period_basis_at, PeriodBasis, TIME_CAP};
pub use regularized::{
    arg_branch, focus_linear_part, regularized_action, regularized_action_from, taylor_invariant,
    FlatFocusModel, FocusLinearPart, ModelPeriods, PeriodSource, RegularizedAction,
    TaylorCoefficient,
};

