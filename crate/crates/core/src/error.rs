use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum PclabError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("derivative order {requested} exceeds the maximum order {max}")]
    OrderTooHigh { requested: usize, max: usize },

    #[error("boundary projection did not converge after {iterations} iterations (point outside the collar)")]
    ProjectionFailed { iterations: usize },

    #[error("point is not strictly inside the domain (rho = {rho:e})")]
    OutsideDomain { rho: f64 },

    #[error("point is not on the boundary (rho = {rho:e})")]
    NotOnBoundary { rho: f64 },

    #[error("gradient of the defining function vanishes at the boundary point")]
    DegenerateBoundary,

    #[error("direction is not complex-tangent (pairing {pairing:e})")]
    NotTangent { pairing: f64 },

    #[error("numerical consistency check failed: {0}")]
    Numerical(String),

    #[error("boundary parametrization produced no points")]
    EmptyParametrization,

    #[error("target set for packing is empty")]
    EmptyTarget,

    #[error("only {usable} admissible rungs remain (need at least {needed})")]
    InsufficientRungs { usable: usize, needed: usize },

    #[error("no containment constant delta >= {min} works (worst sample at depth {depth:e})")]
    NoDelta0 { min: f64, depth: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, PclabError>;
