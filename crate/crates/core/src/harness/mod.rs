//! Experiment harness: configuration and presets, trajectory dumps,
//! multi-trial benchmarks written as CSV, and SVG reports.

pub mod bench;
pub mod config;
pub mod report;
pub mod simulate;

pub use bench::{read_csv, run_bench, run_bench_dims, write_csv, BenchRow, CSV_HEADER};
pub use config::{preset, BuiltModel, ExperimentConfig, Method, ModelKind, PRESETS};
pub use report::{render_svg, write_report};
pub use simulate::write_trajectories;

/// `git describe` of the source tree at build time, or `unknown`.
pub fn build_id() -> &'static str {
    env!("SMCMC_BUILD_ID")
}
