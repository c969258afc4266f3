//! Simulation and spectral analysis of split-step topological quantum walks
//! on a periodic triangular lattice with a single marked node.

// Links the system OpenBLAS/LAPACK used by the dense eigensolver.
extern crate openblas_src;

pub mod bloch;
pub mod error;
pub mod evolution;
pub mod experiments;
pub mod lattice;
mod linalg;
pub mod spectral;

pub use error::{Error, Result};
