mod common;

use std::sync::Arc;

use common::*;
use smcmc_zigzag::baselines::kalman_filter;
use smcmc_zigzag::engine::*;
use smcmc_zigzag::flow::{edh_flow, FlowMap, LambdaSchedule};
use smcmc_zigzag::kernels::{ChainSample, FlowMode, KernelConfig, RefineParams, Refinement};
use smcmc_zigzag::models::{simulate_trajectory, StateSpaceModel};
use smcmc_zigzag::rng::seeded;
use smcmc_zigzag::{Error, State};

fn config(n: usize, n_burnin: usize, mode: FlowMode, refinement: Refinement) -> FilterConfig {
    FilterConfig {
        n_particles: n,
        n_burnin,
        flow_mode: mode,
        schedule: LambdaSchedule::geometric(29, 1.2).unwrap(),
        kernel: KernelConfig {
            refinement,
            refine: RefineParams {
                step_scale: 0.4,
                ..RefineParams::default()
            },
            force_accept: false,
        },
    }
}

fn sample_at(x: State) -> ChainSample {
    let d = x.len();
    ChainSample {
        ancestor: 0,
        x_prev: State::zeros(d),
        x_curr: x.clone(),
        eta0: x,
        log_trans: 0.0,
        log_obs: 0.0,
        log_eta: 0.0,
        flow: Arc::new(FlowMap::identity(d)),
    }
}

#[test]
fn posterior_mean_of_reserved_samples() {
    let c = State::from_vec(vec![1.5, -2.0]);
    let set = ParticleSet {
        t: 1,
        samples: vec![sample_at(c.clone()); 4],
    };
    assert_eq!(estimate_posterior_mean(&set), c);
    let set = ParticleSet {
        t: 1,
        samples: vec![
            sample_at(State::zeros(1)),
            sample_at(State::from_element(1, 2.0)),
        ],
    };
    assert_eq!(estimate_posterior_mean(&set)[0], 1.0);
}

#[test]
fn mse_definition() {
    let z = vec![State::zeros(3); 2];
    assert_eq!(compute_mse(&z, &z).unwrap(), 0.0);
    assert_eq!(
        compute_mse(&[State::from_element(1, 1.0)], &[State::zeros(1)]).unwrap(),
        1.0
    );
    assert_eq!(
        compute_mse(&[State::from_vec(vec![1.0, 1.0])], &[State::zeros(2)]).unwrap(),
        1.0
    );
    assert!(matches!(
        compute_mse(&z, &z[..1]),
        Err(Error::DimensionMismatch { .. })
    ));
}

#[test]
fn empty_observations_are_an_error() {
    let m = gaussian_grid(4, 1.0);
    let cfg = config(10, 0, FlowMode::Edh, Refinement::Dzz);
    assert!(run_filter(&m, &[], &cfg, &mut seeded(1)).is_err());
}

#[test]
fn forced_single_chain_is_reproducible() {
    let m = gaussian_grid(4, 1.0);
    let traj = simulate_trajectory(&m, 5, &mut seeded(2)).unwrap();
    let mut cfg = config(1, 0, FlowMode::Edh, Refinement::Dzz);
    cfg.kernel.force_accept = true;
    let a = run_filter(&m, &traj.observations, &cfg, &mut seeded(3)).unwrap();
    let b = run_filter(&m, &traj.observations, &cfg, &mut seeded(3)).unwrap();
    assert_eq!(a.estimates, b.estimates);
    let d = a.total_diagnostics();
    assert_eq!((d.rho1(), d.rho2(), d.rho3()), (1.0, 1.0, 1.0));
}

#[test]
fn forced_joint_draws_average_to_the_proposal_mean() {
    // every stage accepts and nothing refines: reserved states are fresh flow proposals
    let m = gaussian_grid(4, 1.0);
    let y = State::from_vec(vec![1.0, -0.5, 0.2, 2.0]);
    let n = 20_000;
    let mut cfg = config(n, 0, FlowMode::Edh, Refinement::None);
    cfg.kernel.force_accept = true;
    let run = run_filter(&m, std::slice::from_ref(&y), &cfg, &mut seeded(4)).unwrap();
    let flow = edh_flow(&[m.initial_state()], &m, &y, &cfg.schedule).unwrap();
    let want = flow.apply(&m.predict_mean(&m.initial_state()));
    let cov = flow.c() * m.sigma() * flow.c().transpose();
    for k in 0..4 {
        let se = (cov[(k, k)] / n as f64).sqrt();
        assert!(
            (run.estimates[0][k] - want[k]).abs() < 4.0 * se,
            "component {k}"
        );
    }
}

#[test]
fn exact_flow_proposal_recovers_the_posterior() {
    // with a fine schedule the flow proposal is the posterior, so stage 1 is an
    // independence sampler with a near-perfect proposal
    let m = gaussian_grid(4, 1.0);
    let y = State::from_vec(vec![0.7, -1.2, 0.4, 1.5]);
    let n = 20_000;
    let mut cfg = config(n, 100, FlowMode::Edh, Refinement::None);
    cfg.schedule = LambdaSchedule::geometric(1000, 1.003).unwrap();
    let run = run_filter(&m, std::slice::from_ref(&y), &cfg, &mut seeded(5)).unwrap();
    let kf = &kalman_filter(&m, std::slice::from_ref(&y)).unwrap()[0];
    let (mean, cov) = moments(&run.last_set.states());
    for k in 0..4 {
        let se = (kf.cov[(k, k)] / n as f64).sqrt();
        assert!((mean[k] - kf.mean[k]).abs() < 4.0 * se, "component {k}");
    }
    assert!(smcmc_zigzag::linalg::frobenius_rel_err(&cov, &kf.cov) < 0.05);
    assert!(run.total_diagnostics().rho1() > 0.95);
}

#[test]
fn zigzag_filter_tracks_the_kalman_mean() {
    let m = gaussian_grid(4, 1.0);
    let traj = simulate_trajectory(&m, 10, &mut seeded(6)).unwrap();
    let cfg = config(500, 100, FlowMode::Edh, Refinement::Dzz);
    let run = run_filter(&m, &traj.observations, &cfg, &mut seeded(7)).unwrap();
    let kf = kalman_filter(&m, &traj.observations).unwrap();
    for (est, b) in run.estimates.iter().zip(&kf) {
        // far inside the posterior spread
        let gap = (est - &b.mean).norm_squared() / b.cov.trace();
        assert!(gap < 0.1, "gap {gap}");
    }
    assert_eq!(run.estimates.len(), 10);
    assert_eq!(run.last_set.samples.len(), 500);
    assert_eq!(run.last_set.t, 10);
}

#[test]
fn run_diagnostics_are_the_sum_of_step_diagnostics() {
    let m = gh_grid(4, 0.3);
    let traj = simulate_trajectory(&m, 4, &mut seeded(8)).unwrap();
    let cfg = config(50, 10, FlowMode::Ledh, Refinement::Dbps);
    let run = run_filter(&m, &traj.observations, &cfg, &mut seeded(9)).unwrap();
    let total = run.total_diagnostics();
    assert_eq!(total.steps, 4 * 60);
    assert_eq!(
        total.rho1_accepts,
        run.diagnostics.iter().map(|d| d.rho1_accepts).sum::<u64>()
    );
    assert_eq!(total.stage3.iterations, 4 * 60 * 10);
    assert_eq!(run.step_times.len(), 4);
}
