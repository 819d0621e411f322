//! Random Kuramoto networks sampled from graphons, and the graphon
//! (mean-field) description of their synchronous states.
//!
//! The crate is organised bottom-up:
//!
//! * [`quad`], [`rng`]: numerical plumbing (quadrature rules, counter-based
//!   random streams and seed derivation).
//! * [`graphon`]: kernels, ℍ(n,W)/𝔾(n,W) sampling, step graphons, degree
//!   functions and a cut-norm lower-bound estimator.
//! * [`freqdist`]: frequency densities on `[-1,1]`, their quantile functions
//!   and empirical step quantiles.
//! * [`meanfield`]: Ermentrout's self-consistency for Erdős–Rényi kernels,
//!   the critical coupling, the spectrum of the linearisation and the
//!   center-manifold coefficients.
//! * [`finite`]: the n-oscillator system, Newton solves in the mean-zero
//!   gauge, stability and RK4 time integration.
//! * [`instance`]: a sampled network (points, frequencies, graph) and its
//!   finite system.
//! * [`continuation`]: pseudo-arclength continuation in `K`, fold location
//!   and finite-n critical coupling measurements.

pub mod continuation;
pub mod error;
pub mod finite;
pub mod freqdist;
pub mod graphon;
pub mod instance;
pub mod meanfield;
pub mod quad;
pub mod rng;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
