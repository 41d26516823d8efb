//! Exact-diagonalization laboratory for Nishimori's gauge theory in the
//! transverse-field mixed p-spin glass.
//!
//! The crate builds small hypercubic lattices and their p-spin bond
//! families, assembles the Hamiltonian in the z basis, and evaluates Gibbs
//! expectations and Duhamel correlators spectrally. On top of that it runs
//! quenched disorder averages (Monte Carlo, Gauss-Hermite quadrature, exact
//! binomial enumeration) and checks the gauge identities and correlation
//! bounds that hold on the Nishimori manifold.

// Links the system OpenBLAS that provides LAPACK.
extern crate openblas_src;

pub mod cli;
pub mod disorder;
pub mod error;
pub mod gauge;
pub mod gibbs;
pub mod lattice;
pub mod nishimori;
pub mod operators;

pub use error::{Error, Result};
