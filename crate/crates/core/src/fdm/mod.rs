//! Structured-grid finite differences: operator assembly, steady solves,
//! Crank–Nicolson and explicit central time stepping.

mod grid;
pub mod linalg;
mod march;
mod operator;

pub use grid::{Grid, SpaceTimeField};
pub use march::{central_time_march, courant_number, crank_nicolson_march, solve_ibvp, solve_steady};
pub use operator::{assemble, BoundaryRows, OperatorKind, SpatialOperator};
