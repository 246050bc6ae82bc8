//! Rényi and Tsallis divergences of one-dimensional densities from the
//! standard normal law, and the machinery around their decay under
//! normalized self-convolution.
//!
//! The crate is organised bottom-up:
//!
//! - [`hermite`]: exact rational polynomials, Chebyshev–Hermite `H_k`, Gaussian moments.
//! - [`density`]: closed-form families, sampled grids, and `Z_n` densities by CF powering.
//! - [`divergence`]: quadrature of Rényi, Tsallis, χ², Pearson–Vajda, KL, TV, Hellinger.
//! - [`exp_series`]: normal moments `E H_k(X)` and the Parseval χ² series.
//! - [`edgeworth`]: symbolic Edgeworth polynomials and divergence-expansion coefficients.
//! - [`attraction`]: the subgaussian Laplace-transform criterion.
//! - [`harness`]: sweeps over `n`, rate fits, and the local-limit ratio.

pub mod attraction;
pub mod density;
pub mod divergence;
pub mod edgeworth;
mod error;
pub mod exp_series;
pub mod harness;
pub mod hermite;

pub use error::{Error, Result};
