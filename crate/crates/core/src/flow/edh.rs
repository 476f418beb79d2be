use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{FlowMap, LambdaSchedule};
use crate::error::{Error, Result};
use crate::linalg::{all_finite, log_abs_det, State};
use crate::models::{Observation, StateSpaceModel};

/// Everything the exact-flow drift needs at one time step.
#[derive(Clone, Copy)]
pub struct FlowInputs<'a> {
    /// Prior covariance proxy `P`.
    pub p: &'a DMatrix<f64>,
    pub y: &'a Observation,
    pub model: &'a dyn StateSpaceModel,
    /// Mean of the auxiliary particles at `lambda = 0`.
    pub eta_bar0: &'a State,
}

impl<'a> FlowInputs<'a> {
    /// Uses the model's process covariance as `P`.
    pub fn new(model: &'a dyn StateSpaceModel, y: &'a Observation, eta_bar0: &'a State) -> Self {
        Self {
            p: model.process_cov(),
            y,
            model,
            eta_bar0,
        }
    }
}

/// Drift of the exact Daum–Huang flow at pseudo-time `lambda`, linearised at `eta_bar`:
///
/// `A = -1/2 P H' (lambda H P H' + R)^{-1} H`,
/// `b = (I + 2 lambda A) [(I + lambda A) P H' R^{-1} (y - e) + A eta_bar0]`.
pub fn edh_step_params(
    lambda: f64,
    inputs: &FlowInputs<'_>,
    eta_bar: &State,
) -> Result<(DMatrix<f64>, State)> {
    let lin = inputs.model.linearize(eta_bar);
    let d = inputs.p.nrows();
    let h = &lin.h;
    let pht = inputs.p * h.transpose();
    let s = h * &pht * lambda + &lin.r;
    let s_chol = s.cholesky().ok_or(Error::FlowDegenerate { lambda })?;
    let a = -0.5 * &pht * s_chol.solve(h);
    let r_chol = lin
        .r
        .clone()
        .cholesky()
        .ok_or(Error::FlowDegenerate { lambda })?;
    let innov = r_chol.solve(&(inputs.y - &lin.e));
    let eye = DMatrix::<f64>::identity(d, d);
    let inner = (&eye + &a * lambda) * (&pht * innov) + &a * inputs.eta_bar0;
    let b = (&eye + &a * (2.0 * lambda)) * inner;
    if !a.iter().all(|v| v.is_finite()) || !all_finite(&b) {
        return Err(Error::FlowDiverged { lambda });
    }
    Ok((a, b))
}

/// Compose the Euler-discretised flow into one affine map.
///
/// Each pseudo-time step migrates the mean `eta_bar`, then updates
/// `C <- (I + eps A) C` and `D <- (I + eps A) D + eps b`, accumulating
/// `ln |det C|` factor by factor.
pub fn t_function(
    eta_bar: &State,
    inputs: &FlowInputs<'_>,
    sched: &LambdaSchedule,
) -> Result<FlowMap> {
    if !all_finite(eta_bar) || !all_finite(inputs.eta_bar0) {
        return Err(Error::FlowDiverged { lambda: 0.0 });
    }
    let d = eta_bar.len();
    let eye = DMatrix::<f64>::identity(d, d);
    let mut mean = eta_bar.clone();
    let mut c = eye.clone();
    let mut offset = State::zeros(d);
    let mut log_det = 0.0;
    for (lambda, eps) in sched.steps() {
        let (a, b) = edh_step_params(lambda, inputs, &mean)?;
        let m = &eye + &a * eps;
        log_det += log_abs_det(&m).ok_or(Error::FlowDegenerate { lambda })?;
        mean = &m * &mean + &b * eps;
        c = &m * c;
        offset = &m * offset + &b * eps;
        if !all_finite(&mean) || !all_finite(&offset) {
            return Err(Error::FlowDiverged { lambda });
        }
    }
    FlowMap::new(c, offset, log_det)
}

/// Forward (`x = C eta0 + D`) or inverse application of a flow.
pub fn flow_apply(map: &FlowMap, v: &State, invert: bool) -> Result<State> {
    if invert {
        map.inverse(v)
    } else {
        Ok(map.apply(v))
    }
}

/// `ln q(x | x_prev) = ln p(eta0 | x_prev) - ln |det C|` for `x = C eta0 + D`.
pub fn flow_proposal_logpdf(
    map: &FlowMap,
    eta0: &State,
    x_prev: &State,
    model: &dyn StateSpaceModel,
) -> Result<f64> {
    Ok(model.transition_logpdf(eta0, x_prev)? - map.log_abs_det())
}

/// Local flow for one previous particle, linearised at its noise-free prediction.
pub fn ledh_flow_for_particle(
    x_prev: &State,
    model: &dyn StateSpaceModel,
    y: &Observation,
    sched: &LambdaSchedule,
) -> Result<FlowMap> {
    let eta_bar0 = model.predict_mean(x_prev);
    let inputs = FlowInputs::new(model, y, &eta_bar0);
    t_function(&eta_bar0, &inputs, sched)
}

/// Local flows for a whole particle set, computed in parallel. Failures stay per particle.
pub fn ledh_flow_batch(
    prev: &[State],
    model: &dyn StateSpaceModel,
    y: &Observation,
    sched: &LambdaSchedule,
) -> Vec<Result<FlowMap>> {
    prev.par_iter()
        .map(|x| ledh_flow_for_particle(x, model, y, sched))
        .collect()
}

/// Shared flow for the whole ensemble, linearised at the mean prediction.
pub fn edh_flow(
    prev: &[State],
    model: &dyn StateSpaceModel,
    y: &Observation,
    sched: &LambdaSchedule,
) -> Result<FlowMap> {
    let eta_bar0 = predicted_mean(prev, model)?;
    let inputs = FlowInputs::new(model, y, &eta_bar0);
    t_function(&eta_bar0, &inputs, sched)
}

/// Mean of `f(x, 0)` over a particle set.
pub fn predicted_mean(prev: &[State], model: &dyn StateSpaceModel) -> Result<State> {
    if prev.is_empty() {
        return Err(Error::DegenerateEnsemble);
    }
    let mut acc = State::zeros(model.dim());
    for x in prev {
        acc += model.predict_mean(x);
    }
    Ok(acc / prev.len() as f64)
}
