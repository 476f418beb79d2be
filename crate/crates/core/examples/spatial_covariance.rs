//! Build the sensor-grid process covariance and inspect its spectrum.

use smcmc_zigzag::models::{build_spatial_covariance, DispersionParams, GridGeometry};

fn main() -> smcmc_zigzag::Result<()> {
    let params = DispersionParams::benchmark();
    for d in [4, 16, 64] {
        let geom = GridGeometry::square(d)?;
        let s = build_spatial_covariance(&geom, &params);
        let eig = s.clone().symmetric_eigen().eigenvalues;
        let (lo, hi) = eig
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
        println!(
            "d={d:>3} side={} diag={:.3} nearest-neighbour={:.3} eig in [{lo:.4}, {hi:.2}] cond={:.0}",
            geom.side(),
            s[(0, 0)],
            s[(0, 1)],
            hi / lo
        );
    }
    Ok(())
}
