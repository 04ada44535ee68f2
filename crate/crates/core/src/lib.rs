//! Numerical laboratory for entropy production in the Kac model.
//!
//! N one-dimensional velocities live on the energy sphere `sum v_i^2 = N`
//! and evolve by random pair rotations. The crate builds the two-Maxwellian
//! product test states, computes their normalization through convolution
//! powers of the square-law density (Fourier inversion in log-domain),
//! compares those powers against the Gaussian local-limit with computable
//! error certificates, and evaluates the entropy and collision-production
//! functionals whose ratio exhibits the `log N / N^{1-2 beta}` decay.

// Validations use `!(x > 0.0)` rather than `x <= 0.0` so NaN inputs are
// rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod clt;
pub mod densities;
pub mod error;
pub mod functionals;
pub mod normalization;
pub mod quad;
pub mod sphere;
pub mod walk;

pub use error::{Error, Result};
