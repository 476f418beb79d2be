//! Delayed-rejection refinement of the current state.
//!
//! Both samplers augment the state with a velocity `u` in whitened
//! coordinates and move by `L^{-T} u`. One iteration is an MH step on the
//! involution `(x, u) -> (x + L^{-T} u, -u)`; on rejection a second
//! proposal changes the velocity at the midpoint `x'` (one coordinate flip
//! for the Zig-Zag variant, a gradient reflection for the bouncy variant)
//! and travels back by the new velocity. The velocity is negated after every
//! iteration, so accepted moves keep their direction.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use super::{LogTarget, Preconditioner};
use crate::error::{Error, Result};
use crate::linalg::{ln_one_minus_exp, State};

/// Denominators `1 - rho1` below this reject the delayed stage.
const MIN_REJECTION_MASS: f64 = 1e-12;
/// Gradients shorter than this cannot define a reflection.
const MIN_GRAD_NORM: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Refinement {
    /// Discretized Zig-Zag: delayed proposal flips one velocity coordinate.
    Dzz,
    /// Discrete bouncy particle sampler: delayed proposal reflects the velocity.
    Dbps,
    None,
}

impl Refinement {
    pub fn name(self) -> &'static str {
        match self {
            Refinement::Dzz => "dzz",
            Refinement::Dbps => "dbps",
            Refinement::None => "none",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineParams {
    pub n_thinning: usize,
    /// Velocity components are `Uniform(-s, s)` (Zig-Zag) or `N(0, s^2/3)` (bouncy).
    pub step_scale: f64,
    /// Bouncy sampler only: probability of redrawing the velocity after an iteration.
    pub p_refresh: f64,
    /// Include the forward/reverse flip-index probabilities in the delayed ratio.
    pub flip_correction: bool,
    /// Test hook: accept every first-stage proposal.
    pub force_accept: bool,
}

impl Default for RefineParams {
    fn default() -> Self {
        Self {
            n_thinning: 10,
            step_scale: 1.0,
            p_refresh: 0.1,
            flip_correction: true,
            force_accept: false,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RefineStats {
    pub iterations: u64,
    pub first_accepts: u64,
    pub delayed_accepts: u64,
    /// Delayed stage skipped: no positive flip weight or no usable reflection.
    pub zero_weight_skips: u64,
    pub model_errors: u64,
}

impl RefineStats {
    pub fn accepts(&self) -> u64 {
        self.first_accepts + self.delayed_accepts
    }

    pub fn accept_rate(&self) -> f64 {
        if self.iterations == 0 {
            0.0
        } else {
            self.accepts() as f64 / self.iterations as f64
        }
    }
}

impl std::ops::AddAssign for RefineStats {
    fn add_assign(&mut self, o: Self) {
        self.iterations += o.iterations;
        self.first_accepts += o.first_accepts;
        self.delayed_accepts += o.delayed_accepts;
        self.zero_weight_skips += o.zero_weight_skips;
        self.model_errors += o.model_errors;
    }
}

/// Outcome of one delayed-rejection step, before the velocity negation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Move {
    First,
    /// Delayed proposal accepted; carries the flipped coordinate for the Zig-Zag kernel.
    Delayed(Option<usize>),
    Rejected,
}

/// Index drawn with probability proportional to `max(0, m_k)`; `None` if no weight is positive.
pub fn sample_flip_index(m: &[f64], rng: &mut dyn RngCore) -> Option<usize> {
    let w = m.iter().map(|v| v.max(0.0));
    WeightedIndex::new(w).ok().map(|dist| dist.sample(rng))
}

/// `ln(max(0, m_i) / sum_k max(0, m_k))`.
fn log_flip_prob(m: &[f64], i: usize) -> f64 {
    let total: f64 = m.iter().map(|v| v.max(0.0)).sum();
    (m[i].max(0.0) / total).ln()
}

/// A persistent refinement chain on `(x, u)`.
pub struct PdmpChain<'a> {
    target: &'a dyn LogTarget,
    pre: &'a Preconditioner,
    kind: Refinement,
    params: RefineParams,
    x: State,
    lp: f64,
    u: State,
    stats: RefineStats,
}

impl<'a> PdmpChain<'a> {
    pub fn new(
        target: &'a dyn LogTarget,
        pre: &'a Preconditioner,
        kind: Refinement,
        params: RefineParams,
        x0: State,
        rng: &mut dyn RngCore,
    ) -> Result<Self> {
        if kind == Refinement::None {
            return Err(Error::config(
                "filter.method",
                "refinement chain needs dzz or dbps",
            ));
        }
        if pre.dim() != x0.len() || target.dim() != x0.len() {
            return Err(Error::DimensionMismatch {
                expected: pre.dim(),
                found: x0.len(),
            });
        }
        let lp = target.logpdf(&x0)?;
        let mut chain = Self {
            target,
            pre,
            kind,
            params,
            u: State::zeros(x0.len()),
            x: x0,
            lp,
            stats: RefineStats::default(),
        };
        chain.u = chain.draw_velocity(rng);
        Ok(chain)
    }

    pub fn x(&self) -> &State {
        &self.x
    }

    pub fn log_density(&self) -> f64 {
        self.lp
    }

    pub fn velocity(&self) -> &State {
        &self.u
    }

    /// Overrides the whitened velocity (for tests and demonstrations).
    pub fn set_velocity(&mut self, u: State) {
        self.u = u;
    }

    pub fn stats(&self) -> RefineStats {
        self.stats
    }

    pub fn into_state(self) -> (State, f64, RefineStats) {
        (self.x, self.lp, self.stats)
    }

    /// Per-component variance of the whitened velocity, `s^2 / 3` for both laws.
    fn velocity_variance(&self) -> f64 {
        self.params.step_scale * self.params.step_scale / 3.0
    }

    fn draw_velocity(&self, rng: &mut dyn RngCore) -> State {
        let s = self.params.step_scale;
        let d = self.x.len();
        match self.kind {
            Refinement::Dbps => {
                let sd = self.velocity_variance().sqrt();
                State::from_fn(d, |_, _| {
                    let z: f64 = StandardNormal.sample(rng);
                    sd * z
                })
            }
            _ => State::from_fn(d, |_, _| rng.random_range(-1.0..1.0) * s),
        }
    }

    fn eval(&mut self, x: &State) -> f64 {
        match self.target.logpdf(x) {
            Ok(v) if !v.is_nan() => v,
            _ => {
                self.stats.model_errors += 1;
                f64::NEG_INFINITY
            }
        }
    }

    /// One full iteration: delayed-rejection move, velocity negation, optional refresh.
    pub fn step(&mut self, rng: &mut dyn RngCore) -> Move {
        let mv = self.delayed_rejection_move(rng);
        self.u = -&self.u;
        if self.kind == Refinement::Dbps && rng.random::<f64>() < self.params.p_refresh {
            self.u = self.draw_velocity(rng);
        }
        mv
    }

    /// The MH step on the involution, leaving `(x, u)` at the involution output on acceptance.
    pub fn delayed_rejection_move(&mut self, rng: &mut dyn RngCore) -> Move {
        self.stats.iterations += 1;
        let x1 = &self.x + self.pre.step(&self.u);
        let lp1 = self.eval(&x1);
        let log_rho1 = lp1 - self.lp;
        if self.params.force_accept || rng.random::<f64>().ln() < log_rho1 {
            self.x = x1;
            self.lp = lp1;
            self.u = -&self.u;
            self.stats.first_accepts += 1;
            return Move::First;
        }
        if !lp1.is_finite() {
            return Move::Rejected;
        }
        // 1 - rho1(x, x') with x' rejected, so lp1 < lp here
        let log_den = ln_one_minus_exp(log_rho1);
        if !(log_den.exp() >= MIN_REJECTION_MASS) {
            return Move::Rejected;
        }
        let g_raw = match self.target.logpdf_grad(&x1) {
            Ok((_, g)) => g,
            Err(_) => {
                self.stats.model_errors += 1;
                return Move::Rejected;
            }
        };
        let g = self.pre.whiten_grad(&g_raw);
        let u1 = -&self.u;
        let (u2, flip, log_q_ratio) = match self.kind {
            Refinement::Dzz => {
                let m: Vec<f64> = u1.iter().zip(g.iter()).map(|(a, b)| a * b).collect();
                let Some(i) = sample_flip_index(&m, rng) else {
                    self.stats.zero_weight_skips += 1;
                    return Move::Rejected;
                };
                let mut u2 = u1.clone();
                u2[i] = -u2[i];
                let log_q_ratio = if self.params.flip_correction {
                    // the reverse move arrives at x' with velocity -u2
                    let m_rev: Vec<f64> = u2.iter().zip(g.iter()).map(|(a, b)| -a * b).collect();
                    log_flip_prob(&m_rev, i) - log_flip_prob(&m, i)
                } else {
                    0.0
                };
                (u2, Some(i), log_q_ratio)
            }
            _ => {
                // Euclidean reflection of the position-space velocity about the raw gradient
                let gg = g_raw.norm_squared();
                if !(gg.sqrt() >= MIN_GRAD_NORM) {
                    self.stats.zero_weight_skips += 1;
                    return Move::Rejected;
                }
                let v1 = self.pre.step(&u1);
                let v2 = &v1 - &g_raw * (2.0 * v1.dot(&g_raw) / gg);
                let u2 = self.pre.l().tr_mul(&v2);
                // the reflection is not an isometry of the velocity law, so its density enters
                let var = self.velocity_variance();
                let log_q_ratio = -0.5 * (u2.norm_squared() - u1.norm_squared()) / var;
                (u2, None, log_q_ratio)
            }
        };
        let x2 = &x1 - self.pre.step(&u2);
        let lp2 = self.eval(&x2);
        if !(lp2 > lp1) {
            // the reverse first stage would accept, so the numerator vanishes
            return Move::Rejected;
        }
        let log_num = ln_one_minus_exp(lp1 - lp2);
        let log_rho2 = log_num - log_den + lp2 - self.lp + log_q_ratio;
        if rng.random::<f64>().ln() < log_rho2 {
            self.x = x2;
            self.lp = lp2;
            self.u = u2;
            self.stats.delayed_accepts += 1;
            Move::Delayed(flip)
        } else {
            Move::Rejected
        }
    }
}

/// Result of a refinement sweep of `n_thinning` iterations.
#[derive(Debug, Clone)]
pub struct RefineOutcome {
    pub x: State,
    pub log_density: f64,
    pub stats: RefineStats,
}

fn refine(
    kind: Refinement,
    target: &dyn LogTarget,
    pre: &Preconditioner,
    x0: &State,
    params: &RefineParams,
    rng: &mut dyn RngCore,
) -> Result<RefineOutcome> {
    if params.n_thinning == 0 {
        return Err(Error::config("filter.n_thinning", "must be at least 1"));
    }
    let mut chain = PdmpChain::new(target, pre, kind, *params, x0.clone(), rng)?;
    for _ in 0..params.n_thinning {
        chain.step(rng);
    }
    let (x, log_density, stats) = chain.into_state();
    Ok(RefineOutcome {
        x,
        log_density,
        stats,
    })
}

/// Discretized Zig-Zag refinement starting from a fresh uniform velocity.
pub fn dzz_refine(
    target: &dyn LogTarget,
    pre: &Preconditioner,
    x0: &State,
    params: &RefineParams,
    rng: &mut dyn RngCore,
) -> Result<RefineOutcome> {
    refine(Refinement::Dzz, target, pre, x0, params, rng)
}

/// Discrete bouncy particle refinement starting from a fresh Gaussian velocity.
pub fn dbps_refine(
    target: &dyn LogTarget,
    pre: &Preconditioner,
    x0: &State,
    params: &RefineParams,
    rng: &mut dyn RngCore,
) -> Result<RefineOutcome> {
    refine(Refinement::Dbps, target, pre, x0, params, rng)
}
