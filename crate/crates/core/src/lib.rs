//! Formal-power (pseudoanalytic) solver for the Dirichlet problem of
//! `∇·(σ∇u) = 0` on star-shaped planar domains.

pub mod boundary;
pub mod conductivity;
pub mod error;
pub mod experiments;
pub mod formal_powers;
pub mod geometry;
pub mod spline;

pub use error::{Error, Result};
