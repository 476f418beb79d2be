//! Multi-trial benchmarks and their CSV reports.
//!
//! Every trial simulates one trajectory from its own data stream and runs
//! each method on it with a method-specific stream, so rows do not depend
//! on the number of worker threads or on the order methods are listed in.

use std::io::{Read, Write};
use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;

use super::config::{BuiltModel, ExperimentConfig, Method};
use crate::baselines::{bootstrap_pf, kalman_filter};
use crate::engine::{compute_mse, mse_trace, run_filter};
use crate::error::{Error, Result};
use crate::linalg::State;
use crate::models::{simulate_trajectory, Trajectory};
use crate::rng::{stream, STREAM_DATA};

pub const CSV_HEADER: [&str; 14] = [
    "trial",
    "t",
    "method",
    "d",
    "sigma_y2",
    "particles",
    "mse",
    "rho1",
    "rho2",
    "rho3",
    "wall_ms",
    "seed",
    "status",
    "mse_t",
];

/// One CSV row: a single trial, or the mean over trials when `trial` is `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub trial: Option<usize>,
    /// Time steps completed.
    pub t: usize,
    pub method: String,
    pub d: usize,
    pub sigma_y2: Option<f64>,
    pub particles: Option<usize>,
    pub mse: Option<f64>,
    /// Acceptance rates of the three kernel stages; `None` for the baselines.
    pub rho: Option<[f64; 3]>,
    /// Mean wall-clock milliseconds per time step.
    pub wall_ms: Option<f64>,
    pub seed: u64,
    pub status: String,
    /// Per-step squared error divided by `d`.
    pub mse_t: Vec<f64>,
}

impl BenchRow {
    pub fn is_aggregate(&self) -> bool {
        self.trial.is_none()
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

/// Simulated data for trial `trial`, shared by every method.
pub fn trial_data(cfg: &ExperimentConfig, model: &BuiltModel, trial: usize) -> Result<Trajectory> {
    let mut rng = stream(cfg.run.seed, trial as u64, STREAM_DATA);
    simulate_trajectory(model.as_dyn(), cfg.run.t, &mut rng)
}

/// Run one method on one trajectory.
pub fn run_method(
    cfg: &ExperimentConfig,
    model: &BuiltModel,
    data: &Trajectory,
    trial: usize,
    method: Method,
) -> BenchRow {
    let mut rng = stream(cfg.run.seed, trial as u64, method.stream_purpose());
    let started = Instant::now();
    let mut rho = None;
    let mut particles = None;
    let estimates: Result<Vec<State>> = match method {
        Method::Kf => match model.gaussian() {
            Some(m) => kalman_filter(m, &data.observations)
                .map(|bs| bs.into_iter().map(|b| b.mean).collect()),
            None => Err(Error::config(
                "filter.method",
                "kf needs model.type = gaussian",
            )),
        },
        Method::Bpf => {
            particles = Some(cfg.bpf_particles());
            bootstrap_pf(
                model.as_dyn(),
                &data.observations,
                cfg.bpf_particles(),
                &mut rng,
            )
        }
        _ => {
            particles = Some(cfg.filter.n);
            cfg.filter_config(method)
                .map(|fc| fc.expect("sequential MCMC method"))
                .and_then(|fc| run_filter(model.as_dyn(), &data.observations, &fc, &mut rng))
                .map(|run| {
                    let d = run.total_diagnostics();
                    rho = Some([d.rho1(), d.rho2(), d.rho3()]);
                    run.estimates
                })
        }
    };
    let elapsed = started.elapsed();
    let (t, mse, mse_t, status) = match estimates.and_then(|e| {
        let m = compute_mse(&e, &data.states)?;
        Ok((e, m))
    }) {
        Ok((e, m)) => (
            e.len(),
            Some(m),
            mse_trace(&e, &data.states),
            "ok".to_string(),
        ),
        Err(err) => {
            warn!("trial {trial} {method}: {err}");
            let t = match err {
                Error::Diverged { t, .. } => t.saturating_sub(1),
                _ => 0,
            };
            rho = None;
            (t, None, Vec::new(), "failed".to_string())
        }
    };
    let wall_ms = (cfg.run.timing && t > 0).then(|| elapsed.as_secs_f64() * 1e3 / t as f64);
    BenchRow {
        trial: Some(trial),
        t,
        method: method.name().to_string(),
        d: cfg.model.d,
        sigma_y2: sigma_y2_column(cfg),
        particles,
        mse,
        rho,
        wall_ms,
        seed: cfg.run.seed,
        status,
        mse_t,
    }
}

fn sigma_y2_column(cfg: &ExperimentConfig) -> Option<f64> {
    match cfg.model.kind {
        super::config::ModelKind::Gaussian => Some(cfg.model.sigma_y2),
        super::config::ModelKind::GhPoisson => None,
    }
}

fn mean(v: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

/// Mean over successful trials of one method.
pub fn aggregate(cfg: &ExperimentConfig, method: Method, rows: &[&BenchRow]) -> BenchRow {
    let ok: Vec<&&BenchRow> = rows.iter().filter(|r| r.is_ok()).collect();
    let rho = if ok.iter().all(|r| r.rho.is_some()) && !ok.is_empty() {
        let k = |i: usize| mean(ok.iter().map(|r| r.rho.unwrap()[i])).unwrap();
        Some([k(0), k(1), k(2)])
    } else {
        None
    };
    let steps = ok.first().map_or(0, |r| r.mse_t.len());
    let mse_t = (0..steps)
        .map(|k| mean(ok.iter().map(|r| r.mse_t[k])).unwrap())
        .collect();
    BenchRow {
        trial: None,
        t: if ok.is_empty() { 0 } else { cfg.run.t },
        method: method.name().to_string(),
        d: cfg.model.d,
        sigma_y2: sigma_y2_column(cfg),
        particles: rows.first().and_then(|r| r.particles),
        mse: mean(ok.iter().filter_map(|r| r.mse)),
        rho,
        wall_ms: mean(ok.iter().filter_map(|r| r.wall_ms)),
        seed: cfg.run.seed,
        status: if ok.len() == rows.len() {
            "ok".to_string()
        } else {
            format!("failed {}/{}", rows.len() - ok.len(), rows.len())
        },
        mse_t,
    }
}

/// All trial rows followed by one mean row per method.
pub fn run_bench(cfg: &ExperimentConfig) -> Result<Vec<BenchRow>> {
    cfg.validate()?;
    let model = cfg.build_model()?;
    info!(
        "bench: {} d={} trials={} seed={} methods={:?}",
        cfg.model.kind.name(),
        cfg.model.d,
        cfg.run.trials,
        cfg.run.seed,
        cfg.filter
            .methods
            .iter()
            .map(|m| m.name())
            .collect::<Vec<_>>()
    );
    let data = (0..cfg.run.trials)
        .map(|k| trial_data(cfg, &model, k))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, Method)> = (0..cfg.run.trials)
        .flat_map(|k| cfg.filter.methods.iter().map(move |&m| (k, m)))
        .collect();
    let mut rows: Vec<BenchRow> = jobs
        .par_iter()
        .map(|&(k, m)| {
            info!(
                "trial {k} {m}: data stream ({}, {k}, {STREAM_DATA}), method stream ({}, {k}, {})",
                cfg.run.seed,
                cfg.run.seed,
                m.stream_purpose()
            );
            run_method(cfg, &model, &data[k], k, m)
        })
        .collect();
    for &m in &cfg.filter.methods {
        let of_m: Vec<&BenchRow> = rows.iter().filter(|r| r.method == m.name()).collect();
        let agg = aggregate(cfg, m, &of_m);
        info!(
            "{m}: mean mse {} over {} trial(s), status {}",
            agg.mse.map_or("-".into(), |v| format!("{v:.4}")),
            of_m.len(),
            agg.status
        );
        rows.push(agg);
    }
    Ok(rows)
}

/// Run the benchmark once per grid dimension and concatenate the rows.
pub fn run_bench_dims(cfg: &ExperimentConfig, dims: &[usize]) -> Result<Vec<BenchRow>> {
    if dims.is_empty() {
        return run_bench(cfg);
    }
    let mut out = Vec::new();
    for &d in dims {
        let mut c = cfg.clone();
        c.model.d = d;
        c.validate()?;
        out.extend(run_bench(&c)?);
    }
    Ok(out)
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

pub fn write_csv<W: Write>(rows: &[BenchRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in rows {
        let rho = |i: usize| opt(r.rho.map(|p| p[i]));
        let trace: Vec<String> = r.mse_t.iter().map(f64::to_string).collect();
        out.write_record([
            r.trial.map_or("mean".to_string(), |k| k.to_string()),
            r.t.to_string(),
            r.method.clone(),
            r.d.to_string(),
            opt(r.sigma_y2),
            opt(r.particles),
            opt(r.mse),
            rho(0),
            rho(1),
            rho(2),
            opt(r.wall_ms),
            r.seed.to_string(),
            r.status.clone(),
            trace.join(";"),
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Report(format!("csv: {e}"))
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, line: u64) -> Result<Option<T>> {
    let s = rec.get(i).unwrap_or("");
    if s.is_empty() {
        return Ok(None);
    }
    s.parse().map(Some).map_err(|_| {
        Error::Report(format!(
            "line {line}: cannot parse {} = '{s}'",
            CSV_HEADER[i]
        ))
    })
}

fn required<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, line: u64) -> Result<T> {
    field(rec, i, line)?
        .ok_or_else(|| Error::Report(format!("line {line}: missing {}", CSV_HEADER[i])))
}

pub fn read_csv<R: Read>(r: R) -> Result<Vec<BenchRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers().map_err(csv_err)?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::Report("unexpected CSV header".into()));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line());
        let trial = match rec.get(0) {
            Some("mean") => None,
            _ => Some(required(&rec, 0, line)?),
        };
        let rho = match (
            field(&rec, 7, line)?,
            field(&rec, 8, line)?,
            field(&rec, 9, line)?,
        ) {
            (Some(a), Some(b), Some(c)) => Some([a, b, c]),
            _ => None,
        };
        let mse_t = rec
            .get(13)
            .unwrap_or("")
            .split(';')
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse()
                    .map_err(|_| Error::Report(format!("line {line}: bad mse_t entry '{s}'")))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(BenchRow {
            trial,
            t: required(&rec, 1, line)?,
            method: rec.get(2).unwrap_or("").to_string(),
            d: required(&rec, 3, line)?,
            sigma_y2: field(&rec, 4, line)?,
            particles: field(&rec, 5, line)?,
            mse: field(&rec, 6, line)?,
            rho,
            wall_ms: field(&rec, 10, line)?,
            seed: required(&rec, 11, line)?,
            status: rec.get(12).unwrap_or("").to_string(),
            mse_t,
        });
    }
    Ok(rows)
}
