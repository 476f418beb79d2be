//! Helpers shared by the integration tests and the acceptance runner.
#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, RngCore};
use rand_distr::{Distribution, StandardNormal};
use smcmc_zigzag::models::{
    DispersionParams, GhPoissonModel, GhSkewedTParams, LinearGaussianModel, StateSpaceModel,
};
use smcmc_zigzag::State;

/// Central-difference gradient with step `h`.
pub fn fd_grad(f: impl Fn(&State) -> f64, x: &State, h: f64) -> State {
    State::from_fn(x.len(), |i, _| {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += h;
        xm[i] -= h;
        (f(&xp) - f(&xm)) / (2.0 * h)
    })
}

/// `||a - b|| / max(||b||, 1e-8)`.
pub fn rel_err(a: &State, b: &State) -> f64 {
    (a - b).norm() / b.norm().max(1e-8)
}

pub fn normal_vec(d: usize, scale: f64, rng: &mut dyn RngCore) -> State {
    State::from_fn(d, |_, _| {
        let z: f64 = StandardNormal.sample(rng);
        scale * z
    })
}

pub fn uniform_vec(d: usize, lo: f64, hi: f64, rng: &mut dyn RngCore) -> State {
    State::from_fn(d, |_, _| rng.random_range(lo..hi))
}

pub fn gaussian_grid(d: usize, sigma_y2: f64) -> LinearGaussianModel {
    LinearGaussianModel::sensor_grid(d, 0.9, sigma_y2, &DispersionParams::benchmark()).unwrap()
}

pub fn gh_grid(d: usize, gamma: f64) -> GhPoissonModel {
    GhPoissonModel::sensor_grid(
        d,
        0.9,
        7.0,
        gamma,
        1.0,
        1.0 / 3.0,
        &DispersionParams::benchmark(),
    )
    .unwrap()
}

pub fn scalar_gaussian(alpha: f64, sigma2: f64, sigma_y2: f64) -> LinearGaussianModel {
    LinearGaussianModel::new(alpha, DMatrix::from_element(1, 1, sigma2), sigma_y2).unwrap()
}

pub fn scalar_gh(nu: f64, gamma: f64) -> GhPoissonModel {
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

/// Worst relative error of the transition and observation gradients against
/// central differences over `points` random `(x_prev, x, y)` draws.
pub fn worst_gradient_error(
    model: &dyn StateSpaceModel,
    points: usize,
    x_scale: f64,
    rng: &mut dyn RngCore,
) -> (f64, f64) {
    let d = model.dim();
    let (mut worst_t, mut worst_o) = (0.0f64, 0.0f64);
    for _ in 0..points {
        let x_prev = normal_vec(d, x_scale, rng);
        let x = normal_vec(d, x_scale, rng);
        let y = model.observation_sample(&normal_vec(d, x_scale, rng), rng);
        let (_, gt) = model.transition_logpdf_grad(&x, &x_prev).unwrap();
        let ft = fd_grad(|z| model.transition_logpdf(z, &x_prev).unwrap(), &x, 1e-5);
        worst_t = worst_t.max(rel_err(&ft, &gt));
        let (_, go) = model.observation_logpdf_grad(&y, &x).unwrap();
        let fo = fd_grad(|z| model.observation_logpdf(&y, z).unwrap(), &x, 1e-5);
        worst_o = worst_o.max(rel_err(&fo, &go));
    }
    (worst_t, worst_o)
}

/// Sample mean and covariance of a set of vectors.
pub fn moments(xs: &[State]) -> (State, DMatrix<f64>) {
    let n = xs.len() as f64;
    let d = xs[0].len();
    let mut mean = State::zeros(d);
    for x in xs {
        mean += x;
    }
    mean /= n;
    let mut cov = DMatrix::zeros(d, d);
    for x in xs {
        let r = x - &mean;
        cov += &r * r.transpose();
    }
    (mean, cov / (n - 1.0))
}

/// Push `samples` prior draws for one linear-Gaussian step through the EDH map
/// and compare with the exact Kalman posterior.
pub struct FlowOracle {
    /// `||mean error|| / sqrt(tr(P_post) / n)`.
    pub mean_err_se: f64,
    /// Largest per-component `|mean error| / sqrt(P_post,kk / n)`.
    pub max_component_se: f64,
    pub cov_rel_err: f64,
}

pub fn flow_pushforward_oracle(
    d: usize,
    sigma_y2: f64,
    sched: &smcmc_zigzag::flow::LambdaSchedule,
    samples: usize,
    seed: u64,
) -> FlowOracle {
    use smcmc_zigzag::baselines::{kalman_step, GaussianBelief};
    use smcmc_zigzag::flow::edh_flow;
    let m = gaussian_grid(d, sigma_y2);
    let mut rng = smcmc_zigzag::rng::seeded(seed);
    let x_prev = normal_vec(d, 1.0, &mut rng);
    let x = m.transition_sample(&x_prev, &mut rng);
    let y = m.observation_sample(&x, &mut rng);
    let post = kalman_step(
        &GaussianBelief {
            mean: x_prev.clone(),
            cov: DMatrix::zeros(d, d),
        },
        &y,
        &m,
    )
    .unwrap();
    let flow = edh_flow(std::slice::from_ref(&x_prev), &m, &y, sched).unwrap();
    let pushed: Vec<State> = (0..samples)
        .map(|_| flow.apply(&m.transition_sample(&x_prev, &mut rng)))
        .collect();
    let (mean, cov) = moments(&pushed);
    let err = &mean - &post.mean;
    let n = samples as f64;
    let max_component_se = (0..d)
        .map(|k| err[k].abs() / (post.cov[(k, k)] / n).sqrt())
        .fold(0.0, f64::max);
    FlowOracle {
        mean_err_se: err.norm() / (post.cov.trace() / n).sqrt(),
        max_component_se,
        cov_rel_err: smcmc_zigzag::linalg::frobenius_rel_err(&cov, &post.cov),
    }
}

/// Worst-case figures over random flow instances.
#[derive(Debug, Default)]
pub struct InvertibilityReport {
    pub singular: usize,
    pub max_round_trip: f64,
    pub max_log_det_gap: f64,
}

/// Random linear-Gaussian and skewed-t/Poisson flows with random schedules.
pub fn invertibility_suite(instances: usize, seed: u64) -> InvertibilityReport {
    use smcmc_zigzag::flow::{edh_flow, flow_apply, LambdaSchedule};
    let mut rng = smcmc_zigzag::rng::seeded(seed);
    let mut rep = InvertibilityReport::default();
    for k in 0..instances {
        let d = rng.random_range(1..=6usize);
        let b = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
        let sigma = &b * b.transpose() + DMatrix::identity(d, d) * 0.1;
        let alpha = rng.random_range(-1.0..1.0);
        let model: Box<dyn StateSpaceModel> = if k % 2 == 0 {
            Box::new(LinearGaussianModel::new(alpha, sigma, rng.random_range(0.05..5.0)).unwrap())
        } else {
            Box::new(
                GhPoissonModel::new(
                    alpha,
                    sigma,
                    GhSkewedTParams {
                        nu: rng.random_range(4.5..20.0),
                        gamma: uniform_vec(d, -0.5, 0.5, &mut rng),
                    },
                    rng.random_range(0.5..2.0),
                    rng.random_range(-0.5..0.5),
                )
                .unwrap(),
            )
        };
        let prev: Vec<State> = (0..rng.random_range(1..5usize))
            .map(|_| normal_vec(d, 1.0, &mut rng))
            .collect();
        let y = model.observation_sample(&normal_vec(d, 1.0, &mut rng), &mut rng);
        let sched =
            LambdaSchedule::geometric(rng.random_range(1..40usize), rng.random_range(0.8..1.5))
                .unwrap();
        let flow = match edh_flow(&prev, model.as_ref(), &y, &sched) {
            Ok(f) => f,
            Err(_) => {
                rep.singular += 1;
                continue;
            }
        };
        let Some(direct) = flow.direct_log_abs_det() else {
            rep.singular += 1;
            continue;
        };
        if !direct.is_finite() {
            rep.singular += 1;
        }
        rep.max_log_det_gap = rep.max_log_det_gap.max((direct - flow.log_abs_det()).abs());
        for _ in 0..5 {
            let eta0 = normal_vec(d, 2.0, &mut rng);
            let x = flow_apply(&flow, &eta0, false).unwrap();
            let back = flow_apply(&flow, &x, true).unwrap();
            rep.max_round_trip = rep.max_round_trip.max((back - eta0).amax());
        }
    }
    rep
}

/// Run refinement sweeps of `params.n_thinning` iterations (fresh velocity per
/// sweep) until `iterations` states are recorded; returns their mean and variance.
pub fn refinement_moments(
    kind: smcmc_zigzag::kernels::Refinement,
    params: smcmc_zigzag::kernels::RefineParams,
    target: &dyn smcmc_zigzag::kernels::LogTarget,
    pre: &smcmc_zigzag::kernels::Preconditioner,
    iterations: usize,
    seed: u64,
) -> (State, State, smcmc_zigzag::kernels::RefineStats) {
    use smcmc_zigzag::kernels::{PdmpChain, RefineStats};
    let mut rng = smcmc_zigzag::rng::seeded(seed);
    let d = target.dim();
    let mut x = State::zeros(d);
    let mut xs = Vec::with_capacity(iterations);
    let mut stats = RefineStats::default();
    while xs.len() < iterations {
        let mut chain = PdmpChain::new(target, pre, kind, params, x.clone(), &mut rng).unwrap();
        for _ in 0..params.n_thinning {
            chain.step(&mut rng);
            xs.push(chain.x().clone());
        }
        stats += chain.stats();
        x = chain.x().clone();
    }
    let (mean, cov) = moments(&xs);
    (mean, cov.diagonal(), stats)
}

/// Transition counts between three regions for one refinement iteration from
/// exact draws of a correlated 2-d Gaussian; a reversible kernel gives a
/// symmetric matrix up to MC noise.
pub fn balance_counts(
    kind: smcmc_zigzag::kernels::Refinement,
    params: smcmc_zigzag::kernels::RefineParams,
    pairs: usize,
    seed: u64,
) -> [[u64; 3]; 3] {
    use smcmc_zigzag::kernels::{GaussianTarget, PdmpChain, Preconditioner};
    let cov = DMatrix::from_row_slice(2, 2, &[1.0, 0.6, 0.6, 2.0]);
    let mean = State::from_vec(vec![0.5, -0.3]);
    let chol = cov.clone().cholesky().unwrap().l();
    let precision = cov.try_inverse().unwrap();
    let target = GaussianTarget {
        mean: mean.clone(),
        precision: precision.clone(),
    };
    // a deliberately rough preconditioner so the whitened gradient is not trivial
    let pre =
        Preconditioner::from_matrix(DMatrix::from_row_slice(2, 2, &[1.5, 0.0, 0.0, 0.8])).unwrap();
    let region = |x: &State| {
        let s = x[0] + 0.4 * x[1];
        if s < 0.1 {
            0
        } else if s < 1.2 {
            1
        } else {
            2
        }
    };
    let mut rng = smcmc_zigzag::rng::seeded(seed);
    let mut counts = [[0u64; 3]; 3];
    for _ in 0..pairs {
        let x0 = &mean + &chol * normal_vec(2, 1.0, &mut rng);
        let a = region(&x0);
        let mut chain = PdmpChain::new(&target, &pre, kind, params, x0, &mut rng).unwrap();
        chain.step(&mut rng);
        counts[a][region(chain.x())] += 1;
    }
    counts
}

/// Largest `|N_ab - N_ba| / sqrt(N_ab + N_ba)` over region pairs.
#[allow(clippy::needless_range_loop)]
pub fn max_imbalance(c: &[[u64; 3]; 3]) -> f64 {
    let mut worst = 0.0f64;
    for a in 0..3 {
        for b in a + 1..3 {
            let (x, y) = (c[a][b] as f64, c[b][a] as f64);
            if x + y > 0.0 {
                worst = worst.max((x - y).abs() / (x + y).sqrt());
            }
        }
    }
    worst
}
