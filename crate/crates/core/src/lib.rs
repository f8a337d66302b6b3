//! Numerical experiments for variable-exponent Hardy spaces on a periodic
//! model of `ℝ^n`: Luxemburg norms, Riesz transforms, Poisson extensions,
//! harmonic tensor fields and maximal functions.
//!
//! Everything is generic over the scalar type `S: Real` (`f32` or `f64`);
//! the aliases at the crate root fix `S = f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod characterize;
pub mod convergence;
pub mod corpus;
mod error;
pub mod exponent;
mod fft;
pub mod grid;
pub mod halfspace;
pub mod kernel;
pub mod lebesgue;
pub mod maximal;
pub mod operators;
pub mod scalar;

pub use error::{Error, Result};
pub use exponent::{ExponentRule, LogHolder};
pub use kernel::{Kernel, Profile};
pub use operators::RieszSymbol;
pub use scalar::Real;

pub type Grid = grid::Grid<f64>;
pub type GridFunction = grid::GridFunction<f64>;
pub type Spectrum = grid::Spectrum<f64>;
pub type HalfSpaceField = grid::HalfSpaceField<f64>;
pub type VariableExponent = exponent::VariableExponent<f64>;
