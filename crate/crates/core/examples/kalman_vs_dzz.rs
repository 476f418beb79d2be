//! Track a small linear-Gaussian grid with DZZ(EDH) and compare with the Kalman filter.

use smcmc_zigzag::baselines::kalman_filter;
use smcmc_zigzag::engine::{compute_mse, run_filter};
use smcmc_zigzag::harness::{ExperimentConfig, Method};
use smcmc_zigzag::models::simulate_trajectory;
use smcmc_zigzag::rng::{stream, STREAM_DATA};

fn main() -> smcmc_zigzag::Result<()> {
    let mut cfg = ExperimentConfig::default();
    cfg.model.d = 4;
    cfg.run.t = 15;
    let built = cfg.build_model()?;
    let model = built.gaussian().unwrap();
    let data = simulate_trajectory(model, cfg.run.t, &mut stream(cfg.run.seed, 0, STREAM_DATA))?;
    let kf = kalman_filter(model, &data.observations)?;
    let fc = cfg.filter_config(Method::DzzEdh)?.unwrap();
    let run = run_filter(
        model,
        &data.observations,
        &fc,
        &mut stream(cfg.run.seed, 0, 2),
    )?;
    println!(
        "{:>3} {:>10} {:>10} {:>10}",
        "t", "truth[0]", "kf[0]", "dzz[0]"
    );
    for (t, ((x, b), e)) in data.states.iter().zip(&kf).zip(&run.estimates).enumerate() {
        println!(
            "{:>3} {:>10.4} {:>10.4} {:>10.4}",
            t + 1,
            x[0],
            b.mean[0],
            e[0]
        );
    }
    let kf_means: Vec<_> = kf.iter().map(|b| b.mean.clone()).collect();
    let diag = run.total_diagnostics();
    println!(
        "mse kf {:.4} dzz {:.4}; rho1 {:.3} rho2 {:.3} rho3 {:.3}",
        compute_mse(&kf_means, &data.states)?,
        compute_mse(&run.estimates, &data.states)?,
        diag.rho1(),
        diag.rho2(),
        diag.rho3()
    );
    Ok(())
}
