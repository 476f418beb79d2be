//! Sequential MCMC filtering for high-dimensional state-space models.
//!
//! At each time step a Markov chain targets the joint law of `(x_{t-1}, x_t)`
//! given the reserved particles of the previous step. Each chain move is a
//! composite Metropolis–Hastings kernel with three stages:
//!
//! 1. a joint draw of ancestor and state, mapped through an invertible
//!    (EDH or LEDH) particle flow;
//! 2. an ancestry refinement from the previous empirical distribution;
//! 3. a refinement of the current state by a discretized Zig-Zag sampler
//!    (or, for comparison, a discrete bouncy particle sampler).
//!
//! The crate ships both benchmark models (linear-Gaussian spatial sensor
//! network; skewed-t dynamics with Poisson counts), exact and classical
//! baselines (Kalman filter, bootstrap particle filter) and an experiment
//! harness that writes CSV reports and static SVG figures.
//!
//! See `examples/` for one runnable program per capability.

// `!(x > 0.0)` is used on purpose so NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod engine;
pub mod error;
pub mod flow;
pub mod harness;
pub mod kernels;
pub mod linalg;
pub mod models;
pub mod rng;

pub use error::{Error, Result};
pub use linalg::State;
