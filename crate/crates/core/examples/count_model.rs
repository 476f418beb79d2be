//! Skewed-t dynamics with Poisson counts: DZZ(EDH) against a bootstrap filter.

use smcmc_zigzag::baselines::bootstrap_pf;
use smcmc_zigzag::engine::{compute_mse, run_filter};
use smcmc_zigzag::harness::{preset, Method};
use smcmc_zigzag::models::simulate_trajectory;
use smcmc_zigzag::rng::{stream, STREAM_DATA};

fn main() -> smcmc_zigzag::Result<()> {
    let mut cfg = preset("table2-d144")?;
    cfg.model.d = 9;
    cfg.filter.n = 300;
    let built = cfg.build_model()?;
    let model = built.as_dyn();
    let data = simulate_trajectory(model, cfg.run.t, &mut stream(cfg.run.seed, 0, STREAM_DATA))?;
    let counts: Vec<String> = data.observations[0]
        .iter()
        .map(|c| format!("{c:.0}"))
        .collect();
    println!("counts at t=1: {}", counts.join(" "));
    let fc = cfg.filter_config(Method::DzzEdh)?.unwrap();
    let run = run_filter(
        model,
        &data.observations,
        &fc,
        &mut stream(cfg.run.seed, 0, 2),
    )?;
    let bpf = bootstrap_pf(
        model,
        &data.observations,
        cfg.bpf_particles(),
        &mut stream(cfg.run.seed, 0, 5),
    )?;
    let diag = run.total_diagnostics();
    println!(
        "mse dzz_edh {:.4} (rho3 {:.3}), bpf {:.4} with {} particles",
        compute_mse(&run.estimates, &data.states)?,
        diag.rho3(),
        compute_mse(&bpf, &data.states)?,
        cfg.bpf_particles()
    );
    Ok(())
}
