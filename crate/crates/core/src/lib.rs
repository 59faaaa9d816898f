//! Numerical engine for the half-space phi^4 renormalization-group flow:
//! one-dimensional boundary heat kernels, regularized flowing propagators,
//! the perturbative flow-equation hierarchy at loop order <= 1 with BPHZ
//! renormalization, tree-indexed weight factors, and Gaussian field sampling
//! against the regularized covariance.

pub mod error;
pub mod fit;
pub mod flow;
pub mod grid;
pub mod heatkernel;
pub mod kernel;
pub mod propagator;
pub mod quad;
pub mod special;
pub mod testfn;
pub mod trees;
pub mod sum;

pub use error::{Error, Result};
