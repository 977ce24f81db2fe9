//! Numerical toolbox for bipartite entanglement: one-shot separability
//! criteria, symmetric extensions, IC-POVM tomography with Monte-Carlo
//! acceptance tests, and PPT-versus-separable geometry.
//!
//! Conventions fixed across the crate: row-major dense storage, zero-based
//! indices, product basis `|i>|j>` at index `i * dim_b + j`, logarithms in
//! base 2.

pub mod cli;
pub mod closure;
pub mod criteria;
pub mod error;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod rng;
pub mod spec;
pub mod states;
pub mod symext;
pub mod tomography;

pub use error::{Error, Result};
pub use linalg::{BipartiteShape, ComplexMatrix, DensityMatrix, Side, C64};
