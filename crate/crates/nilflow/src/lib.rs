//! Symplectic geometry of left-trivialized tangent bundles of 2-step
//! nilpotent Lie groups: geodesic flow integration and numerical
//! certification of complete integrability.
//!
//! The crate is organized around [`algebra::TwoStepAlgebra`], which carries a
//! metric 2-step algebra through its j-maps together with the simply
//! connected group in exponential coordinates. On top of it:
//!
//! - [`symplectic`] implements the left-trivialized symplectic form, the
//!   Poisson bracket and the first-integral criterion;
//! - [`integrals`] houses the first-integral families with exact gradients;
//! - [`heisenberg`] and [`pmetric`] build the Heisenberg models for the
//!   canonical and arbitrary left-invariant metrics;
//! - [`flow`] integrates the geodesic field and reports conservation and
//!   gradient independence;
//! - [`lattice`] handles cocompact lattices and the smooth integrals on
//!   compact quotients;
//! - [`butler`] implements the coadjoint-annihilator non-integrability
//!   predicate;
//! - [`verify`] packages everything into seeded certification suites.

// `!(x > 0.0)` rejects NaN input; `x <= 0.0` would let it through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod butler;
pub mod config;
pub mod error;
pub mod flow;
pub mod heisenberg;
pub mod integrals;
pub mod lattice;
pub mod linalg;
pub mod pmetric;
pub mod report;
pub mod sample;
pub mod state;
pub mod symplectic;
pub mod verify;

pub use algebra::{AlgebraVector, TwoStepAlgebra};
pub use error::{Error, Result};
pub use flow::{Method, Trajectory};
pub use heisenberg::{FamilyKind, HeisenbergGroup};
pub use integrals::FirstIntegral;
pub use lattice::Lattice;
pub use pmetric::PMetric;
pub use report::CheckReport;
pub use state::{TangentPair, TangentState};
