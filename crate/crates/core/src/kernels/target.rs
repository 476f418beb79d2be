use nalgebra::DMatrix;

use crate::error::Result;
use crate::linalg::State;
use crate::models::{Observation, StateSpaceModel};

/// An unnormalised log-density with gradient, as seen by the refinement samplers.
pub trait LogTarget {
    fn dim(&self) -> usize;

    fn logpdf(&self, x: &State) -> Result<f64>;

    fn logpdf_grad(&self, x: &State) -> Result<(f64, State)>;
}

/// `phi(x_t) ∝ p(x_t | x_{t-1}) p(y_t | x_t)` with the ancestor held fixed.
#[derive(Clone, Copy)]
pub struct SmcmcTarget<'a> {
    pub model: &'a dyn StateSpaceModel,
    pub y: &'a Observation,
    pub x_prev: &'a State,
}

impl LogTarget for SmcmcTarget<'_> {
    fn dim(&self) -> usize {
        self.model.dim()
    }

    fn logpdf(&self, x: &State) -> Result<f64> {
        Ok(self.model.transition_logpdf(x, self.x_prev)?
            + self.model.observation_logpdf(self.y, x)?)
    }

    fn logpdf_grad(&self, x: &State) -> Result<(f64, State)> {
        target_logpdf_grad(x, self.x_prev, self.y, self.model)
    }
}

/// Sum of transition and observation log-densities and their gradients.
pub fn target_logpdf_grad(
    x: &State,
    x_prev: &State,
    y: &Observation,
    model: &dyn StateSpaceModel,
) -> Result<(f64, State)> {
    let (lt, gt) = model.transition_logpdf_grad(x, x_prev)?;
    let (lo, go) = model.observation_logpdf_grad(y, x)?;
    Ok((lt + lo, gt + go))
}

/// `-1/2 (x - m)' Q (x - m)`: a fixed Gaussian target given by its precision.
#[derive(Debug, Clone)]
pub struct GaussianTarget {
    pub mean: State,
    pub precision: DMatrix<f64>,
}

impl GaussianTarget {
    pub fn standard(d: usize) -> Self {
        Self {
            mean: State::zeros(d),
            precision: DMatrix::identity(d, d),
        }
    }
}

impl LogTarget for GaussianTarget {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn logpdf(&self, x: &State) -> Result<f64> {
        let r = x - &self.mean;
        Ok(-0.5 * r.dot(&(&self.precision * &r)))
    }

    fn logpdf_grad(&self, x: &State) -> Result<(f64, State)> {
        let r = x - &self.mean;
        let g = -(&self.precision * &r);
        Ok((0.5 * r.dot(&g), g))
    }
}

/// Constant log-density.
#[derive(Debug, Clone, Copy)]
pub struct FlatTarget(pub usize);

impl LogTarget for FlatTarget {
    fn dim(&self) -> usize {
        self.0
    }

    fn logpdf(&self, _x: &State) -> Result<f64> {
        Ok(0.0)
    }

    fn logpdf_grad(&self, _x: &State) -> Result<(f64, State)> {
        Ok((0.0, State::zeros(self.0)))
    }
}
