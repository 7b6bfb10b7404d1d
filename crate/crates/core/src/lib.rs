//! Spectral and phase-space numerics for the linearized non-cutoff Kac
//! operator and its radially symmetric Boltzmann analogue.

pub mod bobylev;
pub mod core_math;
pub mod error;
pub mod evolution;
pub mod singular_quadrature;
pub mod spectrum;
pub mod symbols;
pub mod weyl_quantization;

pub use error::{KacError, Result};
