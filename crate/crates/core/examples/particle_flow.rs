//! Push prior draws through the EDH flow and compare with the Kalman update.

use nalgebra::DMatrix;
use smcmc_zigzag::baselines::{kalman_step, GaussianBelief};
use smcmc_zigzag::flow::{edh_flow, LambdaSchedule};
use smcmc_zigzag::linalg::frobenius_rel_err;
use smcmc_zigzag::models::{DispersionParams, LinearGaussianModel, StateSpaceModel};
use smcmc_zigzag::rng::seeded;
use smcmc_zigzag::State;

fn main() -> smcmc_zigzag::Result<()> {
    let d = 16;
    let m = LinearGaussianModel::sensor_grid(d, 0.9, 1.0, &DispersionParams::benchmark())?;
    let mut rng = seeded(3);
    let x_prev = m.transition_sample(&m.initial_state(), &mut rng);
    let y = m.observation_sample(&m.transition_sample(&x_prev, &mut rng), &mut rng);
    let exact = kalman_step(
        &GaussianBelief {
            mean: x_prev.clone(),
            cov: DMatrix::zeros(d, d),
        },
        &y,
        &m,
    )?;
    let n = 10_000;
    for (steps, ratio) in [(29, 1.2), (200, 1.02), (1000, 1.003)] {
        let flow = edh_flow(
            std::slice::from_ref(&x_prev),
            &m,
            &y,
            &LambdaSchedule::geometric(steps, ratio)?,
        )?;
        let pushed: Vec<State> = (0..n)
            .map(|_| flow.apply(&m.transition_sample(&x_prev, &mut rng)))
            .collect();
        let mean = pushed.iter().fold(State::zeros(d), |a, x| a + x) / n as f64;
        let mut cov = DMatrix::zeros(d, d);
        for x in &pushed {
            let r = x - &mean;
            cov += &r * r.transpose();
        }
        cov /= (n - 1) as f64;
        println!(
            "N_lambda={steps:>4}: |mean - kalman| = {:.4}, cov rel err = {:.2}%, log|det C| = {:.3}",
            (&mean - &exact.mean).norm(),
            100.0 * frobenius_rel_err(&cov, &exact.cov),
            flow.log_abs_det()
        );
    }
    Ok(())
}
