//! Numerical laboratory for the critical Schrödinger–Newton equation
//! `Δu - V u + q_u u^{(n+2)/(n-2)} = 0` with the Riesz quotient
//! `q_u = |x|^{-ℓ} * u^{2n/(n-2)}`, restricted to radial fields.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod bubble;
pub mod diff;
pub mod error;
pub mod field;
pub mod fit;
pub mod grid;
pub mod harness;
pub mod norms;
pub mod params;
pub mod quad;
pub mod riesz;
pub mod solver;

pub use error::{LabError, Result};
pub use field::{PowerTail, RadialField};
pub use fit::{powerlaw_fit, RateFit};
pub use grid::{make_grid, GridScheme, RadialGrid};
pub use params::ModelParams;
