//! Reference filters: the exact Kalman filter for the linear-Gaussian model
//! and a bootstrap particle filter for any model.

use nalgebra::DMatrix;
use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::linalg::{cholesky, symmetrize, State};
use crate::models::{LinearGaussianModel, Observation, StateSpaceModel};

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBelief {
    pub mean: State,
    pub cov: DMatrix<f64>,
}

impl GaussianBelief {
    /// Point mass at the model's known initial state.
    pub fn known(x0: State) -> Self {
        let d = x0.len();
        Self {
            mean: x0,
            cov: DMatrix::zeros(d, d),
        }
    }
}

/// Predict with `(alpha m, alpha^2 P + Sigma)`, update with `H = I` and the Joseph form.
pub fn kalman_step(
    belief: &GaussianBelief,
    y: &Observation,
    model: &LinearGaussianModel,
) -> Result<GaussianBelief> {
    let a = model.alpha();
    let mean_pred = &belief.mean * a;
    let p_pred = &belief.cov * (a * a) + model.sigma();
    let r = model.observation_cov();
    let s = &p_pred + &r;
    // K = P S^{-1}; S and P are symmetric so K' = S^{-1} P
    let k = cholesky(&s, "innovation covariance")?
        .solve(&p_pred)
        .transpose();
    let d = mean_pred.len();
    let i_k = DMatrix::<f64>::identity(d, d) - &k;
    let mean = &mean_pred + &k * (y - &mean_pred);
    let cov = &i_k * p_pred * i_k.transpose() + &k * r * k.transpose();
    Ok(GaussianBelief {
        mean,
        cov: symmetrize(&cov),
    })
}

/// Filtering means of the exact filter over a whole observation sequence.
pub fn kalman_filter(
    model: &LinearGaussianModel,
    observations: &[Observation],
) -> Result<Vec<GaussianBelief>> {
    let mut b = GaussianBelief::known(model.initial_state());
    let mut out = Vec::with_capacity(observations.len());
    for y in observations {
        b = kalman_step(&b, y, model)?;
        out.push(b.clone());
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedEnsemble {
    pub particles: Vec<State>,
    pub log_weights: Vec<f64>,
}

impl WeightedEnsemble {
    /// `n` copies of `x` with equal weights.
    pub fn uniform(x: &State, n: usize) -> Self {
        Self {
            particles: vec![x.clone(); n],
            log_weights: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    /// Weights normalised to sum to one, computed with log-sum-exp.
    pub fn normalized_weights(&self) -> Result<Vec<f64>> {
        let max = self
            .log_weights
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::DegenerateEnsemble);
        }
        let w: Vec<f64> = self.log_weights.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = w.iter().sum();
        Ok(w.into_iter().map(|v| v / total).collect())
    }

    /// `1 / sum_i w_i^2`.
    pub fn ess(&self) -> Result<f64> {
        let w = self.normalized_weights()?;
        Ok(1.0 / w.iter().map(|v| v * v).sum::<f64>())
    }

    pub fn weighted_mean(&self) -> Result<State> {
        let w = self.normalized_weights()?;
        let mut m = State::zeros(self.particles[0].len());
        for (x, wi) in self.particles.iter().zip(w) {
            m.axpy(wi, x, 1.0);
        }
        Ok(m)
    }
}

/// Offspring indices from one uniform draw: particle `i` is chosen
/// `floor` or `ceil` of `N w_i` times.
pub fn systematic_resample(weights: &[f64], rng: &mut dyn RngCore) -> Vec<usize> {
    let n = weights.len();
    let u0: f64 = rng.random::<f64>() / n as f64;
    let mut out = Vec::with_capacity(n);
    let mut cum = weights[0];
    let mut i = 0;
    for k in 0..n {
        let u = u0 + k as f64 / n as f64;
        while u > cum && i + 1 < n {
            i += 1;
            cum += weights[i];
        }
        out.push(i);
    }
    out
}

#[derive(Debug, Clone)]
pub struct BpfStep {
    pub ensemble: WeightedEnsemble,
    /// ESS after reweighting, before any resampling.
    pub ess: f64,
    /// Weighted mean after reweighting, before any resampling.
    pub mean: State,
    pub resampled: bool,
}

/// Propagate through the prior, reweight by the likelihood, resample when `ESS < N/2`.
pub fn bootstrap_pf_step(
    ens: &WeightedEnsemble,
    y: &Observation,
    model: &dyn StateSpaceModel,
    rng: &mut dyn RngCore,
) -> Result<BpfStep> {
    let n = ens.len();
    if n < 2 {
        return Err(Error::config(
            "filter.bpf_particles",
            "need at least 2 particles",
        ));
    }
    let mut particles = Vec::with_capacity(n);
    let mut log_weights = Vec::with_capacity(n);
    for (x, lw) in ens.particles.iter().zip(&ens.log_weights) {
        let xn = model.transition_sample(x, rng);
        let ll = model
            .observation_logpdf(y, &xn)
            .unwrap_or(f64::NEG_INFINITY);
        let w = lw + ll;
        log_weights.push(if w.is_nan() { f64::NEG_INFINITY } else { w });
        particles.push(xn);
    }
    let next = WeightedEnsemble {
        particles,
        log_weights,
    };
    let weights = next.normalized_weights()?;
    let ess = 1.0 / weights.iter().map(|v| v * v).sum::<f64>();
    let mean = next.weighted_mean()?;
    if ess < n as f64 / 2.0 {
        let idx = systematic_resample(&weights, rng);
        let particles = idx.iter().map(|&i| next.particles[i].clone()).collect();
        return Ok(BpfStep {
            ensemble: WeightedEnsemble {
                particles,
                log_weights: vec![0.0; n],
            },
            ess,
            mean,
            resampled: true,
        });
    }
    Ok(BpfStep {
        ensemble: next,
        ess,
        mean,
        resampled: false,
    })
}

/// Filtering means of a bootstrap particle filter with `n` particles.
pub fn bootstrap_pf(
    model: &dyn StateSpaceModel,
    observations: &[Observation],
    n: usize,
    rng: &mut dyn RngCore,
) -> Result<Vec<State>> {
    let mut ens = WeightedEnsemble::uniform(&model.initial_state(), n);
    let mut means = Vec::with_capacity(observations.len());
    for y in observations {
        let step = bootstrap_pf_step(&ens, y, model, rng)?;
        means.push(step.mean);
        ens = step.ensemble;
    }
    Ok(means)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn scalar(sy2: f64) -> LinearGaussianModel {
        LinearGaussianModel::new(0.9, DMatrix::from_element(1, 1, 1.0), sy2).unwrap()
    }

    #[test]
    fn scalar_kalman_by_hand() {
        let b = GaussianBelief::known(State::zeros(1));
        let post = kalman_step(&b, &State::from_element(1, 1.0), &scalar(1.0)).unwrap();
        assert!((post.mean[0] - 0.5).abs() < 1e-15);
        assert!((post.cov[(0, 0)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn kalman_limits() {
        let b = GaussianBelief {
            mean: State::from_element(1, 2.0),
            cov: DMatrix::from_element(1, 1, 0.5),
        };
        let y = State::from_element(1, -3.0);
        let vague = kalman_step(&b, &y, &scalar(1e14)).unwrap();
        assert!((vague.mean[0] - 1.8).abs() < 1e-12);
        assert!((vague.cov[(0, 0)] - (0.81 * 0.5 + 1.0)).abs() < 1e-12);
        let sharp = kalman_step(&b, &y, &scalar(1e-14)).unwrap();
        assert!((sharp.mean[0] + 3.0).abs() < 1e-12);
    }

    #[test]
    fn ess_extremes() {
        let ens = WeightedEnsemble::uniform(&State::zeros(1), 8);
        assert!((ens.ess().unwrap() - 8.0).abs() < 1e-12);
        let mut skew = ens.clone();
        skew.log_weights[3] = 1000.0;
        assert!((skew.ess().unwrap() - 1.0).abs() < 1e-12);
        skew.log_weights = vec![f64::NEG_INFINITY; 8];
        assert!(matches!(skew.ess(), Err(Error::DegenerateEnsemble)));
    }

    #[test]
    fn systematic_resampling_counts() {
        let w = [0.5, 0.25, 0.125, 0.125];
        let idx = systematic_resample(&w, &mut seeded(3));
        let count = |i| idx.iter().filter(|&&k| k == i).count();
        assert_eq!((count(0), count(1)), (2, 1));
        assert_eq!(count(2) + count(3), 1);
    }
}
