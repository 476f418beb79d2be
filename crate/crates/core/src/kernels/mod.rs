//! The composite Metropolis–Hastings kernel.
//!
//! One [`composite_step`] runs three stages on a [`ChainSample`]:
//! a flow-mapped joint draw of `(ancestor, x_t)`, an ancestry refinement,
//! and a refinement of `x_t` by [`dzz_refine`] or [`dbps_refine`]. All
//! acceptance tests are done in log space.

mod precondition;
mod refine;
mod target;

use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, RngCore};

pub use precondition::{precondition_matrix, Preconditioner};
pub use refine::{
    dbps_refine, dzz_refine, sample_flip_index, Move, PdmpChain, RefineOutcome, RefineParams,
    RefineStats, Refinement,
};
pub use target::{target_logpdf_grad, FlatTarget, GaussianTarget, LogTarget, SmcmcTarget};

use crate::error::{Error, Result};
use crate::flow::{flow_proposal_logpdf, FlowMap};
use crate::linalg::State;
use crate::models::{Observation, StateSpaceModel};

/// One element of the chain at time `t`.
#[derive(Debug, Clone)]
pub struct ChainSample {
    /// Index into the previous reserved set.
    pub ancestor: usize,
    pub x_prev: State,
    pub x_curr: State,
    /// Flow preimage of `x_curr`.
    pub eta0: State,
    /// `ln p(x_curr | x_prev)`.
    pub log_trans: f64,
    /// `ln p(y | x_curr)`.
    pub log_obs: f64,
    /// `ln p(eta0 | x_prev)`.
    pub log_eta: f64,
    pub flow: Arc<FlowMap>,
}

impl ChainSample {
    /// Build a sample for `(ancestor, x_curr)` and attach the given flow.
    pub fn new(
        model: &dyn StateSpaceModel,
        y: &Observation,
        ancestor: usize,
        x_prev: State,
        x_curr: State,
        flow: Arc<FlowMap>,
    ) -> Result<Self> {
        let log_trans = model.transition_logpdf(&x_curr, &x_prev)?;
        let log_obs = model.observation_logpdf(y, &x_curr)?;
        let eta0 = flow.inverse(&x_curr)?;
        let log_eta = model.transition_logpdf(&eta0, &x_prev)?;
        Ok(Self {
            ancestor,
            x_prev,
            x_curr,
            eta0,
            log_trans,
            log_obs,
            log_eta,
            flow,
        })
    }

    /// Importance weight of the sample under its flow proposal:
    /// `ln p(x|x_prev) + ln p(y|x) - ln p(eta0|x_prev) + ln |det C|`.
    pub fn log_weight(&self) -> f64 {
        self.log_trans + self.log_obs - self.log_eta + self.flow.log_abs_det()
    }
}

/// How the flow for a proposal is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowMode {
    /// One map per time step, shared by all proposals.
    Edh,
    /// One map per previous particle.
    Ledh,
}

impl FlowMode {
    pub fn name(self) -> &'static str {
        match self {
            FlowMode::Edh => "edh",
            FlowMode::Ledh => "ledh",
        }
    }
}

/// Flow maps available during one time step.
#[derive(Debug, Clone)]
pub enum StepFlows {
    Shared(Arc<FlowMap>),
    /// `None` marks an ancestor whose local flow failed.
    PerAncestor(Vec<Option<Arc<FlowMap>>>),
}

impl StepFlows {
    pub fn for_ancestor(&self, j: usize) -> Option<&Arc<FlowMap>> {
        match self {
            StepFlows::Shared(f) => Some(f),
            StepFlows::PerAncestor(v) => v.get(j).and_then(|f| f.as_ref()),
        }
    }

    pub fn mode(&self) -> FlowMode {
        match self {
            StepFlows::Shared(_) => FlowMode::Edh,
            StepFlows::PerAncestor(_) => FlowMode::Ledh,
        }
    }
}

/// Immutable inputs shared by every chain move at one time step.
#[derive(Clone, Copy)]
pub struct StepContext<'a> {
    pub model: &'a dyn StateSpaceModel,
    pub y: &'a Observation,
    /// Reserved states of the previous step (`x_0` alone at `t = 1`).
    pub prev: &'a [State],
    pub flows: &'a StepFlows,
    /// Cached preconditioner for models with a state-independent metric.
    pub preconditioner: Option<&'a Preconditioner>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelConfig {
    pub refinement: Refinement,
    pub refine: RefineParams,
    /// Test hook: accept every proposal of every stage.
    pub force_accept: bool,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            refinement: Refinement::Dzz,
            refine: RefineParams::default(),
            force_accept: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageResult {
    Accepted,
    Rejected,
    /// The proposal could not be evaluated; counted separately and treated as a rejection.
    Failed,
}

/// Acceptance counters and stage timings, merged by summation.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KernelDiagnostics {
    pub steps: u64,
    pub rho1_accepts: u64,
    pub rho2_accepts: u64,
    pub stage3: RefineStats,
    pub flow_failures: u64,
    pub model_errors: u64,
    pub stage_seconds: [f64; 3],
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

impl KernelDiagnostics {
    pub fn rho1(&self) -> f64 {
        ratio(self.rho1_accepts, self.steps)
    }

    pub fn rho2(&self) -> f64 {
        ratio(self.rho2_accepts, self.steps)
    }

    /// Combined first-stage and delayed acceptance of the refinement.
    pub fn rho3(&self) -> f64 {
        self.stage3.accept_rate()
    }

    pub fn rho3_first(&self) -> f64 {
        ratio(self.stage3.first_accepts, self.stage3.iterations)
    }

    pub fn rho3_delayed(&self) -> f64 {
        ratio(self.stage3.delayed_accepts, self.stage3.iterations)
    }
}

impl std::ops::AddAssign for KernelDiagnostics {
    fn add_assign(&mut self, o: Self) {
        self.steps += o.steps;
        self.rho1_accepts += o.rho1_accepts;
        self.rho2_accepts += o.rho2_accepts;
        self.stage3 += o.stage3;
        self.flow_failures += o.flow_failures;
        self.model_errors += o.model_errors;
        for k in 0..3 {
            self.stage_seconds[k] += o.stage_seconds[k];
        }
    }
}

fn accept(log_ratio: f64, force: bool, rng: &mut dyn RngCore) -> bool {
    force || rng.random::<f64>().ln() < log_ratio
}

fn uniform_index(n: usize, rng: &mut dyn RngCore) -> usize {
    rng.random_range(0..n)
}

/// Draw `eta0 ~ p(.|x_prev[j])`, push it through the ancestor's flow and score it.
fn propose_from_ancestor(
    ctx: &StepContext<'_>,
    j: usize,
    rng: &mut dyn RngCore,
) -> Result<ChainSample> {
    let flow = ctx
        .flows
        .for_ancestor(j)
        .ok_or(Error::FlowDegenerate { lambda: 0.0 })?
        .clone();
    let x_prev = ctx.prev[j].clone();
    let eta0 = ctx.model.transition_sample(&x_prev, rng);
    let x_curr = flow.apply(&eta0);
    let log_trans = ctx.model.transition_logpdf(&x_curr, &x_prev)?;
    let log_obs = ctx.model.observation_logpdf(ctx.y, &x_curr)?;
    let log_eta = ctx.model.transition_logpdf(&eta0, &x_prev)?;
    let s = ChainSample {
        ancestor: j,
        x_prev,
        x_curr,
        eta0,
        log_trans,
        log_obs,
        log_eta,
        flow,
    };
    if s.log_weight().is_nan() {
        return Err(Error::Domain("proposal weight is NaN".into()));
    }
    Ok(s)
}

/// A forced joint draw from a fixed ancestor, used to start the chain at each step.
pub fn initial_sample(
    ctx: &StepContext<'_>,
    ancestor: usize,
    rng: &mut dyn RngCore,
) -> Result<ChainSample> {
    propose_from_ancestor(ctx, ancestor, rng)
}

/// Log acceptance ratio of a joint draw against the current sample, shared-flow form
/// (determinant factors cancel).
pub fn edh_log_rho1(proposal: &ChainSample, current: &ChainSample) -> f64 {
    (proposal.log_trans + proposal.log_obs - proposal.log_eta)
        - (current.log_trans + current.log_obs - current.log_eta)
}

/// Generic independence-sampler ratio `pi(x*) q(x) / (pi(x) q(x*))` with flow proposal densities.
pub fn generic_log_rho1(
    model: &dyn StateSpaceModel,
    proposal: &ChainSample,
    current: &ChainSample,
) -> Result<f64> {
    let q_new = flow_proposal_logpdf(&proposal.flow, &proposal.eta0, &proposal.x_prev, model)?;
    let q_cur = flow_proposal_logpdf(&current.flow, &current.eta0, &current.x_prev, model)?;
    Ok(
        (proposal.log_trans + proposal.log_obs) - (current.log_trans + current.log_obs) + q_cur
            - q_new,
    )
}

/// Stage 1: joint draw of ancestor and state through the flow.
pub fn joint_draw_flow(
    ctx: &StepContext<'_>,
    current: &ChainSample,
    force_accept: bool,
    rng: &mut dyn RngCore,
) -> (ChainSample, StageResult) {
    let j = uniform_index(ctx.prev.len(), rng);
    let proposal = match propose_from_ancestor(ctx, j, rng) {
        Ok(p) => p,
        Err(_) => return (current.clone(), StageResult::Failed),
    };
    let log_rho = proposal.log_weight() - current.log_weight();
    if accept(log_rho, force_accept, rng) {
        (proposal, StageResult::Accepted)
    } else {
        (current.clone(), StageResult::Rejected)
    }
}

/// Full ancestry ratio with an empirical-distribution proposal over `n` particles.
pub fn full_log_rho2(n: usize, log_trans_new: f64, log_trans_old: f64, log_obs: f64) -> f64 {
    let ln_pi_hat = -(n as f64).ln();
    let target_new = ln_pi_hat + log_trans_new + log_obs;
    let target_old = ln_pi_hat + log_trans_old + log_obs;
    (target_new + ln_pi_hat) - (target_old + ln_pi_hat)
}

/// Stage 2: propose a fresh ancestor from the previous reserved set.
pub fn refine_ancestry(
    ctx: &StepContext<'_>,
    current: &ChainSample,
    force_accept: bool,
    rng: &mut dyn RngCore,
) -> (ChainSample, StageResult) {
    let j = uniform_index(ctx.prev.len(), rng);
    let x_prev = &ctx.prev[j];
    let Some(flow) = ctx.flows.for_ancestor(j) else {
        return (current.clone(), StageResult::Failed);
    };
    let log_trans = match ctx.model.transition_logpdf(&current.x_curr, x_prev) {
        Ok(v) => v,
        Err(_) => return (current.clone(), StageResult::Failed),
    };
    if !accept(log_trans - current.log_trans, force_accept, rng) {
        return (current.clone(), StageResult::Rejected);
    }
    let reattached = flow.inverse(&current.x_curr).and_then(|eta0| {
        let log_eta = ctx.model.transition_logpdf(&eta0, x_prev)?;
        Ok((eta0, log_eta))
    });
    match reattached {
        Ok((eta0, log_eta)) => (
            ChainSample {
                ancestor: j,
                x_prev: x_prev.clone(),
                x_curr: current.x_curr.clone(),
                eta0,
                log_trans,
                log_obs: current.log_obs,
                log_eta,
                flow: flow.clone(),
            },
            StageResult::Accepted,
        ),
        Err(_) => (current.clone(), StageResult::Failed),
    }
}

/// Stage 3: refine `x_curr` with the ancestor fixed, then re-attach the flow.
pub fn refine_state(
    ctx: &StepContext<'_>,
    cfg: &KernelConfig,
    current: &ChainSample,
    rng: &mut dyn RngCore,
) -> Result<(ChainSample, RefineStats)> {
    let target = SmcmcTarget {
        model: ctx.model,
        y: ctx.y,
        x_prev: &current.x_prev,
    };
    let local;
    let pre = match ctx.preconditioner {
        Some(p) => p,
        None => {
            local = precondition_matrix(ctx.model, &current.x_curr)?;
            &local
        }
    };
    let params = RefineParams {
        force_accept: cfg.force_accept || cfg.refine.force_accept,
        ..cfg.refine
    };
    let out = match cfg.refinement {
        Refinement::Dzz => dzz_refine(&target, pre, &current.x_curr, &params, rng)?,
        Refinement::Dbps => dbps_refine(&target, pre, &current.x_curr, &params, rng)?,
        Refinement::None => return Ok((current.clone(), RefineStats::default())),
    };
    if out.stats.accepts() == 0 {
        return Ok((current.clone(), out.stats));
    }
    let sample = ChainSample::new(
        ctx.model,
        ctx.y,
        current.ancestor,
        current.x_prev.clone(),
        out.x,
        current.flow.clone(),
    )?;
    Ok((sample, out.stats))
}

/// One composite move: joint draw, ancestry refinement, state refinement.
pub fn composite_step(
    ctx: &StepContext<'_>,
    cfg: &KernelConfig,
    current: &ChainSample,
    rng: &mut dyn RngCore,
) -> (ChainSample, KernelDiagnostics) {
    let mut diag = KernelDiagnostics {
        steps: 1,
        ..Default::default()
    };

    let t0 = Instant::now();
    let (s1, r1) = joint_draw_flow(ctx, current, cfg.force_accept, rng);
    match r1 {
        StageResult::Accepted => diag.rho1_accepts += 1,
        StageResult::Failed => diag.flow_failures += 1,
        StageResult::Rejected => {}
    }

    let t1 = Instant::now();
    let (s2, r2) = refine_ancestry(ctx, &s1, cfg.force_accept, rng);
    match r2 {
        StageResult::Accepted => diag.rho2_accepts += 1,
        StageResult::Failed => diag.flow_failures += 1,
        StageResult::Rejected => {}
    }

    let t2 = Instant::now();
    let s3 = match refine_state(ctx, cfg, &s2, rng) {
        Ok((s, stats)) => {
            diag.stage3 = stats;
            s
        }
        Err(_) => {
            diag.model_errors += 1;
            s2
        }
    };
    let t3 = Instant::now();
    diag.stage_seconds = [
        (t1 - t0).as_secs_f64(),
        (t2 - t1).as_secs_f64(),
        (t3 - t2).as_secs_f64(),
    ];
    (s3, diag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{edh_flow, LambdaSchedule};
    use crate::models::LinearGaussianModel;
    use crate::rng::seeded;
    use nalgebra::DMatrix;

    fn setup() -> (LinearGaussianModel, State, Vec<State>, StepFlows) {
        let m = LinearGaussianModel::new(0.9, DMatrix::identity(2, 2), 1.0).unwrap();
        let y = State::from_vec(vec![0.5, -0.2]);
        let prev = vec![
            State::from_vec(vec![0.1, 0.2]),
            State::from_vec(vec![-0.3, 0.4]),
        ];
        let flow = edh_flow(&prev, &m, &y, &LambdaSchedule::geometric(10, 1.2).unwrap()).unwrap();
        (m, y, prev, StepFlows::Shared(Arc::new(flow)))
    }

    #[test]
    fn rates_are_count_ratios() {
        let d = KernelDiagnostics {
            steps: 4,
            rho1_accepts: 1,
            rho2_accepts: 3,
            ..Default::default()
        };
        assert_eq!(d.rho1(), 0.25);
        assert_eq!(d.rho2(), 0.75);
        assert_eq!(KernelDiagnostics::default().rho3(), 0.0);
    }

    #[test]
    fn own_proposal_has_unit_ratio() {
        let (m, y, prev, flows) = setup();
        let ctx = StepContext {
            model: &m,
            y: &y,
            prev: &prev,
            flows: &flows,
            preconditioner: None,
        };
        let s = initial_sample(&ctx, 0, &mut seeded(1)).unwrap();
        assert_eq!(edh_log_rho1(&s, &s), 0.0);
        assert_eq!(s.log_weight() - s.log_weight(), 0.0);
    }

    #[test]
    fn refinement_keeps_ancestor() {
        let (m, y, prev, flows) = setup();
        let pre = precondition_matrix(&m, &State::zeros(2)).unwrap();
        let ctx = StepContext {
            model: &m,
            y: &y,
            prev: &prev,
            flows: &flows,
            preconditioner: Some(&pre),
        };
        let mut rng = seeded(2);
        let s = initial_sample(&ctx, 1, &mut rng).unwrap();
        let (r, stats) = refine_state(&ctx, &KernelConfig::default(), &s, &mut rng).unwrap();
        assert_eq!(stats.iterations, 10);
        assert_eq!(r.ancestor, s.ancestor);
        assert_eq!(r.x_prev, s.x_prev);
        assert!((r.flow.apply(&r.eta0) - &r.x_curr).norm() < 1e-10);
    }
}
