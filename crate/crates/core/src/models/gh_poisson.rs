//! Generalised-hyperbolic skewed-t dynamics with independent Poisson counts.
//!
//! The transition is the skewed-t limit of the GH family (index `-nu/2`,
//! `chi = nu`, `psi = 0`), i.e. the normal variance–mean mixture
//! `x = mu + gamma W + sqrt(W) Sigma^{1/2} z`, `W ~ InvGamma(nu/2, nu/2)`.
//! Its log-density (dropping terms constant in `x_t`) is
//!
//! `ln K_{(nu+d)/2}(sqrt((nu + Q) g)) + (x - mu)' Sigma^{-1} gamma - (nu+d)/4 ln((nu + Q) g)`
//!
//! with `Q = (x - mu)' Sigma^{-1} (x - mu)`, `g = gamma' Sigma^{-1} gamma`.
//! When `gamma = 0` the Bessel argument vanishes and the symmetric
//! multivariate-t form `-(nu+d)/2 ln(1 + Q/nu)` is used instead.

use nalgebra::DMatrix;
use rand::RngCore;
use rand_distr::{Distribution, Gamma, Poisson, StandardNormal};

use super::bessel::log_bessel_k_ratio;
use super::{
    build_spatial_covariance, clamped_exp, DispersionParams, GridGeometry, Linearization,
    Observation, StateSpaceModel,
};
use crate::error::{Error, Result};
use crate::linalg::{cholesky, spd_inverse, State};

/// Largest Poisson rate handed to the sampler.
const MAX_SAMPLE_RATE: f64 = 1e15;

#[derive(Debug, Clone, PartialEq)]
pub struct GhSkewedTParams {
    pub nu: f64,
    pub gamma: State,
}

#[derive(Debug, Clone)]
pub struct GhPoissonModel {
    alpha: f64,
    nu: f64,
    gamma: State,
    sigma: DMatrix<f64>,
    sigma_chol: DMatrix<f64>,
    sigma_inv: DMatrix<f64>,
    sigma_inv_gamma: State,
    gamma_quad: f64,
    sigma_tilde: DMatrix<f64>,
    sigma_tilde_inv: DMatrix<f64>,
    m1: f64,
    m2: f64,
    mixing: Gamma<f64>,
}

impl GhPoissonModel {
    pub fn new(
        alpha: f64,
        sigma: DMatrix<f64>,
        params: GhSkewedTParams,
        m1: f64,
        m2: f64,
    ) -> Result<Self> {
        let d = sigma.nrows();
        if !sigma.is_square() || params.gamma.len() != d {
            return Err(Error::InvalidModel(
                "Sigma and gamma dimensions disagree".into(),
            ));
        }
        let GhSkewedTParams { nu, gamma } = params;
        if !(nu > 4.0) || !nu.is_finite() {
            return Err(Error::InvalidModel(format!(
                "degrees of freedom must exceed 4 for a finite covariance, got {nu}"
            )));
        }
        if !(m1 > 0.0) || !m2.is_finite() || !alpha.is_finite() {
            return Err(Error::InvalidModel(format!(
                "invalid m1={m1}, m2={m2} or alpha={alpha}"
            )));
        }
        let sigma_chol = cholesky(&sigma, "dispersion matrix")?.l();
        let sigma_inv = spd_inverse(&sigma, "dispersion matrix")?;
        let sigma_inv_gamma = &sigma_inv * &gamma;
        let gamma_quad = gamma.dot(&sigma_inv_gamma);
        let sigma_tilde = sigma_tilde(nu, &sigma, &gamma);
        let sigma_tilde_inv = spd_inverse(&sigma_tilde, "skewed-t covariance")?;
        let mixing = Gamma::new(0.5 * nu, 2.0 / nu)
            .map_err(|e| Error::InvalidModel(format!("mixing distribution: {e}")))?;
        Ok(Self {
            alpha,
            nu,
            gamma,
            sigma,
            sigma_chol,
            sigma_inv,
            sigma_inv_gamma,
            gamma_quad,
            sigma_tilde,
            sigma_tilde_inv,
            m1,
            m2,
            mixing,
        })
    }

    /// Sensor-grid dispersion matrix with a constant skewness vector.
    pub fn sensor_grid(
        d: usize,
        alpha: f64,
        nu: f64,
        gamma: f64,
        m1: f64,
        m2: f64,
        dispersion: &DispersionParams,
    ) -> Result<Self> {
        let geom = GridGeometry::square(d)?;
        let sigma = build_spatial_covariance(&geom, dispersion);
        let params = GhSkewedTParams {
            nu,
            gamma: State::from_element(d, gamma),
        };
        Self::new(alpha, sigma, params, m1, m2)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn gamma(&self) -> &State {
        &self.gamma
    }

    /// GH index `lambda = -nu/2`.
    pub fn gh_index(&self) -> f64 {
        -0.5 * self.nu
    }

    pub fn chi(&self) -> f64 {
        self.nu
    }

    pub fn psi(&self) -> f64 {
        0.0
    }

    pub fn m1(&self) -> f64 {
        self.m1
    }

    pub fn m2(&self) -> f64 {
        self.m2
    }

    /// Transition covariance `Var(x_t | x_{t-1})`.
    pub fn sigma_tilde(&self) -> &DMatrix<f64> {
        &self.sigma_tilde
    }

    fn bessel_order(&self) -> f64 {
        // |lambda - d/2| with lambda = -nu/2
        0.5 * (self.nu + self.dim() as f64)
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

    fn check_counts(y: &Observation) -> Result<()> {
        match y.iter().find(|c| !(**c >= 0.0) || !c.is_finite()) {
            Some(c) => Err(Error::Domain(format!(
                "Poisson count must be a nonnegative number, got {c}"
            ))),
            None => Ok(()),
        }
    }

    fn rate(&self, xk: f64) -> f64 {
        self.m1 * clamped_exp(self.m2 * xk).0
    }
}

/// `nu/(nu-2) Sigma + nu^2 / ((2 nu - 8)(nu/2 - 1)^2) gamma gamma'`.
pub(crate) fn sigma_tilde(nu: f64, sigma: &DMatrix<f64>, gamma: &State) -> DMatrix<f64> {
    let a = nu / (nu - 2.0);
    let b = nu * nu / ((2.0 * nu - 8.0) * (0.5 * nu - 1.0).powi(2));
    sigma * a + gamma * gamma.transpose() * b
}

impl StateSpaceModel for GhPoissonModel {
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
        let q = r.dot(&w);
        let order = self.bessel_order();
        if self.gamma_quad == 0.0 {
            let value = -order * (q / self.nu).ln_1p();
            let grad = &w * (-2.0 * order / (self.nu + q));
            return Ok((value, grad));
        }
        let s = (self.nu + q) * self.gamma_quad;
        let z = s.sqrt();
        let k = log_bessel_k_ratio(order, z)?;
        let value = k.log_value + r.dot(&self.sigma_inv_gamma) - 0.5 * order * s.ln();
        let grad = &w * (-k.ratio_up * self.gamma_quad / z) + &self.sigma_inv_gamma;
        Ok((value, grad))
    }

    fn transition_sample(&self, x_prev: &State, rng: &mut dyn RngCore) -> State {
        let w = 1.0 / self.mixing.sample(rng);
        let z = State::from_fn(self.dim(), |_, _| StandardNormal.sample(rng));
        x_prev * self.alpha + &self.gamma * w + (&self.sigma_chol * z) * w.sqrt()
    }

    fn observation_logpdf(&self, y: &Observation, x: &State) -> Result<f64> {
        self.check_dim(x)?;
        self.check_dim(y)?;
        Self::check_counts(y)?;
        let ln_m1 = self.m1.ln();
        Ok(x.iter()
            .zip(y.iter())
            .map(|(xk, yk)| yk * (ln_m1 + self.m2 * xk) - self.rate(*xk))
            .sum())
    }

    fn observation_logpdf_grad(&self, y: &Observation, x: &State) -> Result<(f64, State)> {
        let value = self.observation_logpdf(y, x)?;
        let grad = State::from_fn(self.dim(), |k, _| (y[k] - self.rate(x[k])) * self.m2);
        Ok((value, grad))
    }

    fn observation_sample(&self, x: &State, rng: &mut dyn RngCore) -> Observation {
        State::from_fn(self.dim(), |k, _| {
            let rate = self.rate(x[k]).min(MAX_SAMPLE_RATE);
            if rate <= 0.0 {
                0.0
            } else {
                Poisson::new(rate).map(|p| p.sample(rng)).unwrap_or(0.0)
            }
        })
    }

    /// Exponential link linearised at `at`; the surrogate noise variance equals the Poisson mean.
    fn linearize(&self, at: &State) -> Linearization {
        let d = self.dim();
        let mut saturated = false;
        let h_val = State::from_fn(d, |k, _| {
            let (v, sat) = clamped_exp(self.m2 * at[k]);
            saturated |= sat;
            self.m1 * v
        });
        let slope = &h_val * self.m2;
        let e = &h_val - slope.component_mul(at);
        Linearization {
            h: DMatrix::from_diagonal(&slope),
            e,
            r: DMatrix::from_diagonal(&h_val),
            saturated,
        }
    }

    /// `Lambda(x_ref) + Sigma_tilde^{-1}` with `[Lambda]_kk = m1 m2^2 exp(m2 x_ref(k))`.
    fn expected_neg_hessian(&self, x_ref: &State) -> Result<DMatrix<f64>> {
        self.check_dim(x_ref)?;
        let mut g = self.sigma_tilde_inv.clone();
        for k in 0..self.dim() {
            g[(k, k)] += self.rate(x_ref[k]) * self.m2 * self.m2;
        }
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn scalar(nu: f64, gamma: f64) -> GhPoissonModel {
        GhPoissonModel::new(
            0.9,
            DMatrix::from_element(1, 1, 1.0),
            GhSkewedTParams {
                nu,
                gamma: State::from_element(1, gamma),
            },
            1.0,
            1.0 / 3.0,
        )
        .unwrap()
    }

    #[test]
    fn skewed_t_parameterisation() {
        let m = scalar(7.0, 0.3);
        assert_eq!(m.gh_index(), -3.5);
        assert_eq!(m.chi(), 7.0);
        assert_eq!(m.psi(), 0.0);
    }

    #[test]
    fn rejects_heavy_tails_without_covariance() {
        let r = GhPoissonModel::new(
            0.9,
            DMatrix::from_element(1, 1, 1.0),
            GhSkewedTParams {
                nu: 4.0,
                gamma: State::from_element(1, 0.3),
            },
            1.0,
            1.0 / 3.0,
        );
        assert!(matches!(r, Err(Error::InvalidModel(_))));
    }

    #[test]
    fn sigma_tilde_scalar_value() {
        let m = scalar(7.0, 0.3);
        let expected = 7.0 / 5.0 + 49.0 / (6.0 * 6.25) * 0.09;
        assert!((m.sigma_tilde()[(0, 0)] - expected).abs() < 1e-14);
        assert!((expected - 1.5176).abs() < 1e-12);
    }

    #[test]
    fn poisson_gradient_by_hand() {
        let m = scalar(7.0, 0.3);
        let y = State::from_element(1, 2.0);
        let (_, g) = m.observation_logpdf_grad(&y, &State::zeros(1)).unwrap();
        assert!((g[0] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn negative_count_is_a_domain_error() {
        let m = scalar(7.0, 0.3);
        let y = State::from_element(1, -1.0);
        assert!(matches!(
            m.observation_logpdf(&y, &State::zeros(1)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn poisson_linearization_at_zero() {
        let m = scalar(7.0, 0.3);
        let lin = m.linearize(&State::zeros(1));
        assert!((lin.h[(0, 0)] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(lin.r[(0, 0)], 1.0);
        assert_eq!(lin.e[0], 1.0);
        assert!(!lin.saturated);
        assert!(m.linearize(&State::from_element(1, 1e5)).saturated);
    }

    #[test]
    fn very_negative_state_yields_zero_counts() {
        let m = scalar(7.0, 0.3);
        let mut rng = seeded(9);
        for _ in 0..100 {
            let y = m.observation_sample(&State::from_element(1, -300.0), &mut rng);
            assert_eq!(y[0], 0.0);
        }
    }

    #[test]
    fn symmetric_case_uses_student_t_form() {
        let m = scalar(7.0, 0.0);
        let x = State::from_element(1, 1.5);
        let v = m.transition_logpdf(&x, &State::zeros(1)).unwrap();
        assert!((v - (-4.0 * (1.0 + 2.25 / 7.0_f64).ln())).abs() < 1e-14);
    }

    #[test]
    fn neg_hessian_adds_poisson_curvature() {
        let m = scalar(7.0, 0.3);
        let g = m.expected_neg_hessian(&State::zeros(1)).unwrap();
        assert!((g[(0, 0)] - (1.0 / 9.0 + 1.0 / 1.5176)).abs() < 1e-12);
    }
}
