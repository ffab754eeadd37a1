//! Numerical homogenization of one-dimensional viscous Hamilton-Jacobi equations
//! with pinned, piecewise-convex Hamiltonians.

pub mod cli;
pub mod datum;
pub mod effective;
pub mod error;
pub mod fixtures;
pub mod hamiltonian;
pub mod media;
pub mod oracle;
pub mod problem;
pub mod report;
pub mod solver;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
