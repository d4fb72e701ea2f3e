#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

//! Vibrational polariton double-quantum-coherence simulator.

pub mod basis;
pub mod dqc;
pub mod eigen;
pub mod error;
pub mod griddyn;
pub mod model;
pub mod scalar;
pub mod units;

pub use error::{Error, Result};
pub use scalar::Real;

/// Double-precision product grid.
pub type Grid = griddyn::ProductGrid<f64>;
/// Double-precision grid axis.
pub type GridAxis = griddyn::Axis<f64>;
/// Double-precision wavefunction.
pub type State = griddyn::Wavefunction<f64>;
/// Single-precision product grid.
pub type GridF32 = griddyn::ProductGrid<f32>;
/// Single-precision wavefunction.
pub type StateF32 = griddyn::Wavefunction<f32>;
