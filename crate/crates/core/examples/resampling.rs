//! Systematic resampling counts and effective sample size.

use smcmc_zigzag::baselines::{systematic_resample, WeightedEnsemble};
use smcmc_zigzag::rng::seeded;
use smcmc_zigzag::State;

fn main() -> smcmc_zigzag::Result<()> {
    let weights = [0.5, 0.25, 0.125, 0.0625, 0.0625];
    let mut rng = seeded(1);
    let idx = systematic_resample(&weights, &mut rng);
    let mut counts = [0usize; 5];
    for i in idx {
        counts[i] += 1;
    }
    println!("weights {weights:?} -> offspring {counts:?}");
    let ens = WeightedEnsemble {
        particles: (0..5).map(|i| State::from_element(1, i as f64)).collect(),
        log_weights: weights.iter().map(|w| w.ln()).collect(),
    };
    println!(
        "ess {:.3} of {}, weighted mean {:.4}",
        ens.ess()?,
        ens.len(),
        ens.weighted_mean()?[0]
    );
    Ok(())
}
