//! Log modified Bessel function of the second kind and its order-up ratio.

use smcmc_zigzag::models::bessel::log_bessel_k_ratio;

fn main() -> smcmc_zigzag::Result<()> {
    println!(
        "{:>6} {:>9} {:>14} {:>12} {:>14}",
        "order", "z", "ln K", "K_{v+1}/K_v", "d ln K / dz"
    );
    for order in [-4.0, 0.0, 0.5, 4.5, 12.0] {
        for z in [1e-3, 0.5, 10.0, 800.0] {
            let k = log_bessel_k_ratio(order, z)?;
            println!(
                "{order:>6} {z:>9} {:>14.6} {:>12.6} {:>14.6}",
                k.log_value,
                k.ratio_up,
                k.log_derivative(order, z)
            );
        }
    }
    Ok(())
}
