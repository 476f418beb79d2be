//! The sequential MCMC filter over time.
//!
//! At every step the previous reserved states act as the empirical prior.
//! A single chain of `n_burnin + n_particles` composite moves is run and its
//! last `n_particles` states form the new reserved set; their mean is the
//! filtering estimate.

use std::sync::Arc;
use std::time::{Duration, Instant};

use log::debug;
use rand::RngCore;

use crate::error::{Error, Result};
use crate::flow::{edh_flow, ledh_flow_batch, LambdaSchedule};
use crate::kernels::{
    composite_step, initial_sample, precondition_matrix, ChainSample, FlowMode, KernelConfig,
    KernelDiagnostics, Preconditioner, StepContext, StepFlows,
};
use crate::linalg::{all_finite, State};
use crate::models::{Observation, StateSpaceModel};

#[derive(Debug, Clone, PartialEq)]
pub struct FilterConfig {
    pub n_particles: usize,
    pub n_burnin: usize,
    pub flow_mode: FlowMode,
    pub schedule: LambdaSchedule,
    pub kernel: KernelConfig,
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_particles == 0 {
            return Err(Error::config("filter.n", "must be at least 1"));
        }
        if self.kernel.refine.n_thinning == 0 {
            return Err(Error::config("filter.n_thinning", "must be at least 1"));
        }
        if !(self.kernel.refine.step_scale > 0.0) {
            return Err(Error::config("filter.step_scale", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.kernel.refine.p_refresh) {
            return Err(Error::config("filter.p_refresh", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Reserved chain samples for one time step.
#[derive(Debug, Clone)]
pub struct ParticleSet {
    pub t: usize,
    pub samples: Vec<ChainSample>,
}

impl ParticleSet {
    pub fn states(&self) -> Vec<State> {
        self.samples.iter().map(|s| s.x_curr.clone()).collect()
    }
}

/// Arithmetic mean of the reserved current states.
pub fn estimate_posterior_mean(set: &ParticleSet) -> State {
    let mut acc = State::zeros(set.samples[0].x_curr.len());
    for s in &set.samples {
        acc += &s.x_curr;
    }
    acc / set.samples.len() as f64
}

/// `(1 / (T d)) sum_t ||xhat_t - x_t||^2`.
pub fn compute_mse(estimates: &[State], truth: &[State]) -> Result<f64> {
    if estimates.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            found: estimates.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::Domain("no time steps to score".into()));
    }
    let d = truth[0].len();
    let mut total = 0.0;
    for (e, x) in estimates.iter().zip(truth) {
        if e.len() != x.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                found: e.len(),
            });
        }
        total += (e - x).norm_squared();
    }
    Ok(total / (truth.len() * d) as f64)
}

/// Per-step squared errors `||xhat_t - x_t||^2 / d`.
pub fn mse_trace(estimates: &[State], truth: &[State]) -> Vec<f64> {
    estimates
        .iter()
        .zip(truth)
        .map(|(e, x)| (e - x).norm_squared() / x.len() as f64)
        .collect()
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub estimates: Vec<State>,
    pub diagnostics: Vec<KernelDiagnostics>,
    pub step_times: Vec<Duration>,
    /// The final reserved set.
    pub last_set: ParticleSet,
}

impl RunResult {
    pub fn total_diagnostics(&self) -> KernelDiagnostics {
        let mut d = KernelDiagnostics::default();
        for s in &self.diagnostics {
            d += *s;
        }
        d
    }
}

fn build_flows(
    model: &dyn StateSpaceModel,
    y: &Observation,
    prev: &[State],
    cfg: &FilterConfig,
    t: usize,
) -> Result<StepFlows> {
    match cfg.flow_mode {
        FlowMode::Edh => {
            let flow = edh_flow(prev, model, y, &cfg.schedule).map_err(|e| Error::Diverged {
                t,
                reason: format!("shared flow: {e}"),
            })?;
            Ok(StepFlows::Shared(Arc::new(flow)))
        }
        FlowMode::Ledh => {
            let maps: Vec<_> = ledh_flow_batch(prev, model, y, &cfg.schedule)
                .into_iter()
                .map(|r| r.ok().map(Arc::new))
                .collect();
            if maps.iter().all(|m| m.is_none()) {
                return Err(Error::Diverged {
                    t,
                    reason: "every local flow failed".into(),
                });
            }
            Ok(StepFlows::PerAncestor(maps))
        }
    }
}

/// Run the filter over `observations`, starting from the model's known initial state.
pub fn run_filter(
    model: &dyn StateSpaceModel,
    observations: &[Observation],
    cfg: &FilterConfig,
    rng: &mut dyn RngCore,
) -> Result<RunResult> {
    cfg.validate()?;
    if observations.is_empty() {
        return Err(Error::Domain("observation sequence is empty".into()));
    }
    let constant_pre: Option<Preconditioner> = if model.metric_is_constant() {
        Some(precondition_matrix(model, &model.initial_state())?)
    } else {
        None
    };
    let mut prev = vec![model.initial_state()];
    let mut estimates = Vec::with_capacity(observations.len());
    let mut diagnostics = Vec::with_capacity(observations.len());
    let mut step_times = Vec::with_capacity(observations.len());
    let mut last_set = None;

    for (k, y) in observations.iter().enumerate() {
        let t = k + 1;
        let started = Instant::now();
        let flows = build_flows(model, y, &prev, cfg, t)?;
        let ctx = StepContext {
            model,
            y,
            prev: &prev,
            flows: &flows,
            preconditioner: constant_pre.as_ref(),
        };
        let start_ancestor = (0..prev.len())
            .rev()
            .find(|&j| flows.for_ancestor(j).is_some())
            .expect("at least one flow is available");
        let mut current =
            initial_sample(&ctx, start_ancestor, rng).map_err(|e| Error::Diverged {
                t,
                reason: format!("initial joint draw: {e}"),
            })?;
        let mut diag = KernelDiagnostics::default();
        let total = cfg.n_burnin + cfg.n_particles;
        let mut reserved = Vec::with_capacity(cfg.n_particles);
        for i in 0..total {
            let (next, d) = composite_step(&ctx, &cfg.kernel, &current, rng);
            diag += d;
            current = next;
            if i >= cfg.n_burnin {
                reserved.push(current.clone());
            }
        }
        let set = ParticleSet {
            t,
            samples: reserved,
        };
        let estimate = estimate_posterior_mean(&set);
        if !all_finite(&estimate) {
            return Err(Error::Diverged {
                t,
                reason: "non-finite posterior mean".into(),
            });
        }
        debug!(
            "t={t} rho1={:.3} rho2={:.3} rho3={:.3}",
            diag.rho1(),
            diag.rho2(),
            diag.rho3()
        );
        prev = set.states();
        estimates.push(estimate);
        diagnostics.push(diag);
        step_times.push(started.elapsed());
        last_set = Some(set);
    }
    Ok(RunResult {
        estimates,
        diagnostics,
        step_times,
        last_set: last_set.expect("at least one step"),
    })
}
