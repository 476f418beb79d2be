//! Discretized Zig-Zag and discrete bouncy refinement on a correlated Gaussian.

use nalgebra::DMatrix;
use smcmc_zigzag::kernels::{
    dbps_refine, dzz_refine, GaussianTarget, Preconditioner, RefineParams, RefineStats,
};
use smcmc_zigzag::rng::seeded;
use smcmc_zigzag::State;

fn main() -> smcmc_zigzag::Result<()> {
    let cov = DMatrix::from_row_slice(2, 2, &[1.0, 0.8, 0.8, 1.0]);
    let target = GaussianTarget {
        mean: State::from_vec(vec![1.0, -1.0]),
        precision: cov.clone().try_inverse().unwrap(),
    };
    let exact = Preconditioner::from_matrix(target.precision.clone())?;
    let plain = Preconditioner::identity(2);
    for (label, pre) in [("identity", &plain), ("exact", &exact)] {
        for (name, step_scale) in [("dzz", 0.5), ("dzz", 1.5), ("dbps", 0.5), ("dbps", 1.5)] {
            let params = RefineParams {
                step_scale,
                ..RefineParams::default()
            };
            let mut rng = seeded(11);
            let mut x = State::zeros(2);
            let mut stats = RefineStats::default();
            let (mut sum, mut sq) = (State::zeros(2), State::zeros(2));
            let sweeps = 5_000;
            for _ in 0..sweeps {
                let out = if name == "dzz" {
                    dzz_refine(&target, pre, &x, &params, &mut rng)?
                } else {
                    dbps_refine(&target, pre, &x, &params, &mut rng)?
                };
                x = out.x;
                stats += out.stats;
                sum += &x;
                sq += x.component_mul(&x);
            }
            let mean = sum / sweeps as f64;
            let var = sq / sweeps as f64 - mean.component_mul(&mean);
            println!(
                "{label:>8} {name:>4} s={step_scale}: accept {:.3} (first {}, delayed {}), mean ({:.2}, {:.2}), var ({:.2}, {:.2})",
                stats.accept_rate(),
                stats.first_accepts,
                stats.delayed_accepts,
                mean[0], mean[1], var[0], var[1]
            );
        }
    }
    Ok(())
}
