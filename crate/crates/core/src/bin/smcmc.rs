//! Command-line front end: `simulate`, `bench` and `report`.
//!
//! Exit codes: 0 on success, 2 for configuration errors, 3 for runtime failures.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use smcmc_zigzag::harness::{self, ExperimentConfig};
use smcmc_zigzag::Error;

#[derive(Parser)]
#[command(
    name = "smcmc",
    version,
    about = "Sequential MCMC filtering benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write simulated states and observations as CSV.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Run every configured method over several trials and write a CSV report.
    Bench {
        #[command(flatten)]
        common: Common,
        #[arg(long, short)]
        out: Option<PathBuf>,
        /// Comma-separated grid dimensions to sweep, e.g. 16,64.
        #[arg(long, value_delimiter = ',')]
        dims: Vec<usize>,
        #[arg(long)]
        threads: Option<usize>,
        /// Leave the wall-clock column empty so reruns are byte-identical.
        #[arg(long)]
        no_timing: bool,
    },
    /// Render benchmark CSVs as an SVG figure.
    Report {
        /// Benchmark CSV; may repeat to merge runs at several dimensions.
        #[arg(long = "csv", required = true)]
        csv: Vec<PathBuf>,
        #[arg(long)]
        svg: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    /// Config file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named preset, applied before `--set`.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// Override one key, e.g. `--set filter.n=200`; may repeat.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig, Error> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(p), _) => ExperimentConfig::from_path(p)?,
            (None, Some(name)) => harness::preset(name)?,
            (None, None) => ExperimentConfig::default(),
        };
        let mut overrides = self.set.clone();
        if let Some(t) = self.trials {
            overrides.push(format!("run.trials={t}"));
        }
        if let Some(s) = self.seed {
            overrides.push(format!("run.seed={s}"));
        }
        cfg.apply_overrides(&overrides)?;
        Ok(cfg)
    }
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>, Error> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn run(cli: Cli) -> Result<(), Error> {
    info!("smcmc build {}", harness::build_id());
    match cli.command {
        Command::Simulate { common, out } => {
            let cfg = common.resolve()?;
            info!("resolved config:\n{}", cfg.to_text());
            harness::write_trajectories(&cfg, output(&out)?)
        }
        Command::Bench {
            common,
            out,
            dims,
            threads,
            no_timing,
        } => {
            let mut cfg = common.resolve()?;
            if no_timing {
                cfg.run.timing = false;
            }
            info!("resolved config:\n{}", cfg.to_text());
            let mut pool = rayon::ThreadPoolBuilder::new();
            if let Some(n) = threads {
                if n == 0 {
                    return Err(Error::Config {
                        key: "threads".into(),
                        msg: "must be at least 1".into(),
                    });
                }
                pool = pool.num_threads(n);
            }
            let pool = pool
                .build()
                .map_err(|e| Error::Report(format!("thread pool: {e}")))?;
            let rows = pool.install(|| harness::run_bench_dims(&cfg, &dims))?;
            harness::write_csv(&rows, output(&out)?)
        }
        Command::Report { csv, svg } => harness::write_report(&csv, &svg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::Config { .. }) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
