//! Invertible particle flow.
//!
//! The exact Daum–Huang (EDH) flow moves prior samples along an affine ODE in
//! pseudo-time `lambda` from prior to posterior. Discretising it with Euler
//! steps composes into one affine map `x = C eta0 + D`, so the proposal
//! density follows from the change-of-variables formula. The local variant
//! (LEDH) builds a separate map for each previous particle.

mod edh;
mod map;
mod schedule;

pub use edh::{
    edh_flow, edh_step_params, flow_apply, flow_proposal_logpdf, ledh_flow_batch,
    ledh_flow_for_particle, predicted_mean, t_function, FlowInputs,
};
pub use map::FlowMap;
pub use schedule::LambdaSchedule;
