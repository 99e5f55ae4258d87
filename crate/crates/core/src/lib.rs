//! Matrix Sturm–Liouville problems `-(Y' - σY)' - σ(Y' - σY) - σ²Y = λY` on
//! `(0, π)` with general self-adjoint boundary conditions given by orthogonal
//! projectors.
//!
//! The crate covers the forward problem (eigenvalues, weight matrices, Weyl
//! matrix), the closed-form zero-potential case, asymptotic and Riesz-basis
//! diagnostics, recovery of the boundary projectors from spectral data, and
//! the reduction of quantum-graph problems to the matrix form.

pub mod asymptotics;
pub mod basis;
pub mod dataset;
pub mod error;
pub mod graphs;
pub mod inverse;
pub mod io;
pub mod linalg;
pub mod problem;
pub mod propagator;
pub mod spectrum;
pub mod zerocase;

pub use error::{Error, Result};
pub use linalg::CMat;
pub use problem::{
    index_set, normalize_h1, validate_boundary, BoundaryData, ProblemL, SigmaField, SpectralIndex,
};
