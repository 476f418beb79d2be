//! Dump simulated trajectories as long-format CSV.

use std::io::Write;

use log::info;

use super::bench::trial_data;
use super::config::ExperimentConfig;
use crate::error::{Error, Result};

/// Rows `trial,t,kind,idx,value` with `kind` either `state` or `obs`.
///
/// Trial `k` uses the same data stream as trial `k` of a benchmark with the
/// same config, so the dumped data are exactly what the filters saw.
pub fn write_trajectories<W: Write>(cfg: &ExperimentConfig, w: W) -> Result<()> {
    cfg.validate()?;
    let model = cfg.build_model()?;
    let mut out = csv::Writer::from_writer(w);
    let err = |e: csv::Error| Error::Report(format!("csv: {e}"));
    out.write_record(["trial", "t", "kind", "idx", "value"])
        .map_err(err)?;
    for trial in 0..cfg.run.trials {
        info!("simulate trial {trial} seed {}", cfg.run.seed);
        let data = trial_data(cfg, &model, trial)?;
        for (k, (x, y)) in data.states.iter().zip(&data.observations).enumerate() {
            for (kind, v) in [("state", x), ("obs", y)] {
                for (i, val) in v.iter().enumerate() {
                    out.write_record([
                        trial.to_string(),
                        (k + 1).to_string(),
                        kind.to_string(),
                        i.to_string(),
                        val.to_string(),
                    ])
                    .map_err(err)?;
                }
            }
        }
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_count() {
        let mut c = ExperimentConfig::default();
        c.model.d = 4;
        c.run.t = 3;
        c.run.trials = 2;
        let mut buf = Vec::new();
        write_trajectories(&c, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 2 * 3 * 2 * 4);
        assert!(text.starts_with("trial,t,kind,idx,value\n0,1,state,0,"));
    }
}
