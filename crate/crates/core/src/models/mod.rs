//! State-space models consumed by the flow, the kernels and the baselines.
//!
//! A model bundles the transition and observation densities (up to additive
//! constants) with their gradients, generative samplers, a linearisation of
//! the observation map for the particle flow, and the expected negative
//! Hessian of the one-step target used to precondition refinement moves.

pub mod bessel;
mod geometry;
mod gh_poisson;
mod linear_gaussian;
mod simulate;

use nalgebra::DMatrix;
use rand::RngCore;

pub use geometry::{build_spatial_covariance, DispersionParams, GridGeometry};
pub use gh_poisson::{GhPoissonModel, GhSkewedTParams};
pub use linear_gaussian::LinearGaussianModel;
pub use simulate::{simulate_trajectory, Trajectory};

use crate::error::Result;
use crate::linalg::State;

/// Observations are stored as real vectors; Poisson counts are whole numbers.
pub type Observation = State;

/// Exponent arguments above this are clamped before `exp`.
pub const EXP_CLAMP: f64 = 700.0;

/// `exp(a)` with the argument clamped at [`EXP_CLAMP`]; the flag reports clamping.
pub fn clamped_exp(a: f64) -> (f64, bool) {
    if a > EXP_CLAMP {
        (EXP_CLAMP.exp(), true)
    } else {
        (a.exp(), false)
    }
}

/// First-order expansion of the observation map around a point:
/// `h(x) ~ H x + e` with Gaussian surrogate noise covariance `R`.
#[derive(Debug, Clone)]
pub struct Linearization {
    pub h: DMatrix<f64>,
    pub e: State,
    pub r: DMatrix<f64>,
    /// Set when an exponential had to be clamped while building the expansion.
    pub saturated: bool,
}

/// A discrete-time state-space model `x_t ~ p(.|x_{t-1})`, `y_t ~ p(.|x_t)`.
///
/// Implementations are immutable after construction and shared across threads.
pub trait StateSpaceModel: Send + Sync {
    fn dim(&self) -> usize;

    /// Known initial state `x_0`.
    fn initial_state(&self) -> State {
        State::zeros(self.dim())
    }

    /// Noise-free propagation `f(x_prev, 0)`.
    fn predict_mean(&self, x_prev: &State) -> State;

    /// Process covariance `P` used by the particle flow.
    fn process_cov(&self) -> &DMatrix<f64>;

    fn transition_logpdf(&self, x: &State, x_prev: &State) -> Result<f64>;

    /// Log-density and its gradient with respect to `x`.
    fn transition_logpdf_grad(&self, x: &State, x_prev: &State) -> Result<(f64, State)>;

    fn transition_sample(&self, x_prev: &State, rng: &mut dyn RngCore) -> State;

    fn observation_logpdf(&self, y: &Observation, x: &State) -> Result<f64>;

    fn observation_logpdf_grad(&self, y: &Observation, x: &State) -> Result<(f64, State)>;

    fn observation_sample(&self, x: &State, rng: &mut dyn RngCore) -> Observation;

    fn linearize(&self, at: &State) -> Linearization;

    /// Expected negative Hessian of `ln p(x|x_prev) + ln p(y|x)` evaluated at `x_ref`.
    fn expected_neg_hessian(&self, x_ref: &State) -> Result<DMatrix<f64>>;

    /// True when [`expected_neg_hessian`](Self::expected_neg_hessian) ignores its argument.
    fn metric_is_constant(&self) -> bool {
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamp_flags_overflow() {
        assert_eq!(clamped_exp(1.0), (1.0_f64.exp(), false));
        let (v, sat) = clamped_exp(1e4);
        assert!(sat && v.is_finite());
    }
}
