//! Spectral analysis of the fractional-diffusion limit of a kinetic Fokker-Planck equation
//! with heavy-tailed equilibrium (1 + v^2)^(-beta/2).

// Negated comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod airy;
pub mod basis0;
pub mod basis_eta;
pub mod diffusion;
pub mod eigen;
pub mod error;
pub mod green;
pub mod kappa;
pub mod model;
pub mod ode;
pub mod quad;
pub mod tridiag;

pub use error::{FpError, Result};
pub use model::{make_params, ModelParams, Tolerances};
