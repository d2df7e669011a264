//! Pseudo-Hermitian Hamiltonians obtained from Hermitian ones by the gauge
//! similarity `H = e^f H_H e^{-f}`, with finite-difference discretization,
//! dense diagonalization and residual checks of the resulting identities.

pub mod error;
pub mod grid;
pub mod linalg;
pub mod model;
pub mod operators;
pub mod spectra;
pub mod verify;
pub mod cli;

pub use error::{Error, Result};
