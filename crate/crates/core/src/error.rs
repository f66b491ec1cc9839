use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{model}: point violates chart invariant `{invariant}` (residual {residual:.3e})")]
    Domain {
        model: String,
        invariant: String,
        residual: f64,
    },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("integration failed at t = {t}: step size collapsed")]
    Integration { t: f64, last: Vec<f64> },
    #[error("classification uncertain, eigenvalues {eigenvalues:?}")]
    ClassificationUncertain { eigenvalues: Vec<(f64, f64)> },
    #[error("no return to the J-orbit within time {cap} (fiber non-compact or singular)")]
    NonCompactFiber { cap: f64 },
    #[error("no fiber point found over ({a}, {b})")]
    NoFiberPoint { a: f64, b: f64 },
    #[error("period form not closed: plaquette defect {defect:.3e} near ({a}, {b})")]
    NonClosedForm { defect: f64, a: f64, b: f64 },
    #[error("fit residual {residual:.3e} exceeds tolerance")]
    ResolutionInsufficient { residual: f64 },
    #[error("truncation at degree {degree} cannot decide the canonical representative")]
    UndecidableAtDegree { degree: usize },
    #[error("transport failure near ({a}, {b}): {reason}")]
    TransportFailure { a: f64, b: f64, reason: String },
    #[error("eigensolver did not converge on block {label}")]
    Solver { label: String },
    #[error("path routing error: {0}")]
    Routing(String),
    #[error("polygon is not convex at vertex {index}")]
    NonConvex { index: usize },
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
