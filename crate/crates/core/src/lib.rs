//! Numerical laboratory for bounded pseudoconvex domains in ℂⁿ.
//!
//! Given a defining function ρ (built-in models or a real polynomial in z and
//! z̄), the crate computes Levi forms and the weak set W, box-counting
//! dimensions, linear multitypes, anisotropic polydisc families, separated
//! packings with their weighted sums, divisor projection areas and the
//! convex-type surrogates, and checks the associated inequalities.

pub mod convex;
pub mod cvec;
pub mod divisor;
pub mod domain;
pub mod error;
pub mod geometry;
pub mod levi;
pub mod lowdisc;
pub mod minkowski;
pub mod multitype;
pub mod packing;
pub mod polydisc;
pub mod quadrature;
pub mod suite;

pub use cvec::{CVec, C64};
pub use domain::{DomainKind, DomainSpec, Jet, Term};
pub use error::{PclabError, Result};
