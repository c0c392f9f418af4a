//! Numerical toolkit for unbounded block Jacobi matrices.
//!
//! * [`linalg`]: small dense complex Hermitian algebra.
//! * [`model`]: coefficient families and Dirichlet sections.
//! * [`spectral`]: inertia counting, bisection and spectral classification.
//! * [`checkers`]: hypothesis witnesses, counting bounds, Schur complement tests.
//! * [`transfer`]: scalar transfer matrices, recursions and subordinacy.
//! * [`export`]: diff-stable JSON and CSV.

pub mod checkers;
pub mod error;
pub mod export;
pub mod fit;
pub mod linalg;
pub mod model;
pub mod spectral;
pub mod transfer;

pub use error::{Error, Result};
