//! Numerical toolkit for symmetric stable processes on the line: stable and
//! subordinated densities, the harmonic extension `Q_t`, truncated
//! Littlewood-Paley functionals, maximal functions, a certification pipeline
//! for singular convolution kernels, and a Monte Carlo simulator of the
//! product process `(Y_s, Z_s)`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::type_complexity)]

pub mod density;
pub mod error;
pub mod extension;
pub mod fixtures;
pub mod functionals;
pub mod grid;
pub mod mc;
pub mod multiplier;
pub mod params;
pub mod quad;
pub mod report;
pub mod spectral;
pub mod suite;

pub use error::{Error, Result};
pub use grid::{GridFunction, GridSpec};
pub use params::StableParams;
pub use quad::TimeGrid;
