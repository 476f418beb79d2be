//! Desk-scale benchmark of every method; writes a CSV and an SVG next to each other.
//!
//! Usage: `cargo run --release --example table_bench [OUT_DIR]`

use std::fs::File;
use std::path::PathBuf;

use smcmc_zigzag::harness::{preset, run_bench_dims, write_csv, write_report, Method};

fn main() -> smcmc_zigzag::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| ".".into()));
    let mut cfg = preset("table1-d64-sy1")?;
    cfg.run.trials = 5;
    cfg.filter.methods = Method::ALL.to_vec();
    let rows = run_bench_dims(&cfg, &[4, 16])?;
    println!(
        "{:>9} {:>4} {:>8} {:>6} {:>6} {:>6} {:>9}",
        "method", "d", "mse", "rho1", "rho2", "rho3", "ms/step"
    );
    for r in rows.iter().filter(|r| r.is_aggregate()) {
        let rho = r
            .rho
            .map(|p| p.map(|v| format!("{v:.3}")))
            .unwrap_or_else(|| ["NA".into(), "NA".into(), "NA".into()]);
        println!(
            "{:>9} {:>4} {:>8.4} {:>6} {:>6} {:>6} {:>9.2}",
            r.method,
            r.d,
            r.mse.unwrap_or(f64::NAN),
            rho[0],
            rho[1],
            rho[2],
            r.wall_ms.unwrap_or(f64::NAN)
        );
    }
    let csv = out.join("table_bench.csv");
    write_csv(&rows, File::create(&csv)?)?;
    let svg = out.join("table_bench.svg");
    write_report(&[&csv], &svg)?;
    println!("wrote {} and {}", csv.display(), svg.display());
    Ok(())
}
