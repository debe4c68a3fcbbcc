//! Two-wavefunction pilot-wave simulation: an initial wavefunction evolved
//! forward, a final one evolved backward, and the signed densities, currents
//! and world lines they define together.

pub mod cli;
pub mod error;
pub mod field;
pub mod grid;
pub mod guidance;
pub mod propagate;
pub mod scenarios;
pub mod snapshot;
pub mod spectral;
pub mod statistics;
pub mod trajectory;
pub mod verify;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
