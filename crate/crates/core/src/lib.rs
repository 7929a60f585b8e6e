//! Residual-driven error maps for hard-constrained physics-informed networks.
//!
//! For a linear PDE `D[u] = 0` and an approximation `φ̂` that satisfies the
//! initial and boundary conditions exactly, the error `e = u - φ̂` solves
//! `D[e] = -R` with `R = D[φ̂]`. This crate evaluates `R` through exact network
//! jets, integrates that defect equation with the same finite-difference
//! machinery used for the PDE itself, and compares the result against the true
//! error, an FDM-reference baseline and a semigroup bound.

pub mod error;
pub mod errormap;
pub mod fdm;
pub mod net;
pub mod problems;
pub mod train;

pub use error::{Error, Result};
