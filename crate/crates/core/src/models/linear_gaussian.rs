use nalgebra::DMatrix;
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use super::{
    build_spatial_covariance, DispersionParams, GridGeometry, Linearization, Observation,
    StateSpaceModel,
};
use crate::error::{Error, Result};
use crate::linalg::{cholesky, spd_inverse, State};

/// `x_t = alpha x_{t-1} + v_t`, `v_t ~ N(0, Sigma)`; `y_t = x_t + w_t`, `w_t ~ N(0, sigma_y^2 I)`.
#[derive(Debug, Clone)]
pub struct LinearGaussianModel {
    alpha: f64,
    sigma: DMatrix<f64>,
    sigma_chol: DMatrix<f64>,
    sigma_inv: DMatrix<f64>,
    sigma_y2: f64,
}

impl LinearGaussianModel {
    /// `sigma_y2 = 0` is accepted for simulation only; densities then return a domain error.
    pub fn new(alpha: f64, sigma: DMatrix<f64>, sigma_y2: f64) -> Result<Self> {
        if !sigma.is_square() {
            return Err(Error::InvalidModel(
                "process covariance must be square".into(),
            ));
        }
        if !(sigma_y2 >= 0.0) || !sigma_y2.is_finite() || !alpha.is_finite() {
            return Err(Error::InvalidModel(format!(
                "invalid alpha={alpha} or sigma_y^2={sigma_y2}"
            )));
        }
        let chol = cholesky(&sigma, "process covariance")?;
        let sigma_chol = chol.l();
        let sigma_inv = spd_inverse(&sigma, "process covariance")?;
        Ok(Self {
            alpha,
            sigma,
            sigma_chol,
            sigma_inv,
            sigma_y2,
        })
    }

    /// Spatial sensor-network model on a `sqrt(d) x sqrt(d)` grid.
    pub fn sensor_grid(
        d: usize,
        alpha: f64,
        sigma_y2: f64,
        dispersion: &DispersionParams,
    ) -> Result<Self> {
        let geom = GridGeometry::square(d)?;
        Self::new(alpha, build_spatial_covariance(&geom, dispersion), sigma_y2)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn sigma_inv(&self) -> &DMatrix<f64> {
        &self.sigma_inv
    }

    pub fn sigma_y2(&self) -> f64 {
        self.sigma_y2
    }

    pub fn observation_cov(&self) -> DMatrix<f64> {
        DMatrix::identity(self.dim(), self.dim()) * self.sigma_y2
    }

    fn check_dim(&self, v: &State) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: v.len(),
            });
        }
        Ok(())
    }

    fn obs_precision(&self) -> Result<f64> {
        if self.sigma_y2 > 0.0 {
            Ok(1.0 / self.sigma_y2)
        } else {
            Err(Error::Domain(
                "observation density undefined for sigma_y^2 = 0".into(),
            ))
        }
    }
}

impl StateSpaceModel for LinearGaussianModel {
    fn dim(&self) -> usize {
        self.sigma.nrows()
    }

    fn predict_mean(&self, x_prev: &State) -> State {
        x_prev * self.alpha
    }

    fn process_cov(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    fn transition_logpdf(&self, x: &State, x_prev: &State) -> Result<f64> {
        self.transition_logpdf_grad(x, x_prev).map(|(v, _)| v)
    }

    fn transition_logpdf_grad(&self, x: &State, x_prev: &State) -> Result<(f64, State)> {
        self.check_dim(x)?;
        self.check_dim(x_prev)?;
        let r = x - x_prev * self.alpha;
        let w = &self.sigma_inv * &r;
        Ok((-0.5 * r.dot(&w), -w))
    }

    fn transition_sample(&self, x_prev: &State, rng: &mut dyn RngCore) -> State {
        let z = State::from_fn(self.dim(), |_, _| StandardNormal.sample(rng));
        x_prev * self.alpha + &self.sigma_chol * z
    }

    fn observation_logpdf(&self, y: &Observation, x: &State) -> Result<f64> {
        self.observation_logpdf_grad(y, x).map(|(v, _)| v)
    }

    fn observation_logpdf_grad(&self, y: &Observation, x: &State) -> Result<(f64, State)> {
        self.check_dim(x)?;
        self.check_dim(y)?;
        let prec = self.obs_precision()?;
        let r = y - x;
        Ok((-0.5 * prec * r.norm_squared(), r * prec))
    }

    fn observation_sample(&self, x: &State, rng: &mut dyn RngCore) -> Observation {
        let sd = self.sigma_y2.sqrt();
        State::from_fn(self.dim(), |i, _| {
            let z: f64 = StandardNormal.sample(rng);
            x[i] + sd * z
        })
    }

    fn linearize(&self, _at: &State) -> Linearization {
        let d = self.dim();
        Linearization {
            h: DMatrix::identity(d, d),
            e: State::zeros(d),
            r: self.observation_cov(),
            saturated: false,
        }
    }

    /// `Sigma_y^{-1} + Sigma^{-1}`.
    fn expected_neg_hessian(&self, _x_ref: &State) -> Result<DMatrix<f64>> {
        let prec = self.obs_precision()?;
        let d = self.dim();
        Ok(&self.sigma_inv + DMatrix::identity(d, d) * prec)
    }

    fn metric_is_constant(&self) -> bool {
        true
    }
}
