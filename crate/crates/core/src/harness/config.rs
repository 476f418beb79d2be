//! Flat `section.key = value` configuration with named presets.
//!
//! ```text
//! # linear-Gaussian sensor grid
//! model.type = gaussian
//! model.d = 16
//! filter.method = kf,dzz_edh,bpf
//! run.trials = 5
//! ```
//!
//! Blank lines and `#` comments are ignored. Unknown or repeated keys are
//! errors. A `preset = NAME` line, if present, must come first and seeds
//! every value before the remaining lines override it.

use std::fmt;
use std::path::Path;

use crate::engine::FilterConfig;
use crate::error::{Error, Result};
use crate::flow::LambdaSchedule;
use crate::kernels::{FlowMode, KernelConfig, RefineParams, Refinement};
use crate::models::{
    DispersionParams, GhPoissonModel, GridGeometry, LinearGaussianModel, StateSpaceModel,
};

/// Default refinement step scale is `STEP_SCALE_AUTO / sqrt(d)`.
pub const STEP_SCALE_AUTO: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Gaussian,
    GhPoisson,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Gaussian => "gaussian",
            ModelKind::GhPoisson => "ghpoisson",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Kf,
    DzzEdh,
    DzzLedh,
    DbpsEdh,
    Bpf,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Kf,
        Method::DzzEdh,
        Method::DzzLedh,
        Method::DbpsEdh,
        Method::Bpf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Kf => "kf",
            Method::DzzEdh => "dzz_edh",
            Method::DzzLedh => "dzz_ledh",
            Method::DbpsEdh => "dbps_edh",
            Method::Bpf => "bpf",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == s)
    }

    /// Fixed RNG purpose code, independent of the order methods are listed in.
    pub fn stream_purpose(self) -> u64 {
        match self {
            Method::Kf => 1,
            Method::DzzEdh => 2,
            Method::DzzLedh => 3,
            Method::DbpsEdh => 4,
            Method::Bpf => 5,
        }
    }

    /// Flow mode and refinement for the sequential MCMC methods.
    pub fn smcmc_parts(self) -> Option<(FlowMode, Refinement)> {
        match self {
            Method::DzzEdh => Some((FlowMode::Edh, Refinement::Dzz)),
            Method::DzzLedh => Some((FlowMode::Ledh, Refinement::Dzz)),
            Method::DbpsEdh => Some((FlowMode::Edh, Refinement::Dbps)),
            Method::Kf | Method::Bpf => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSection {
    pub kind: ModelKind,
    pub d: usize,
    pub alpha: f64,
    pub sigma_y2: f64,
    pub alpha0: f64,
    pub alpha1: f64,
    pub beta: f64,
    pub nu: f64,
    pub gamma: f64,
    pub m1: f64,
    pub m2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterSection {
    pub methods: Vec<Method>,
    pub n: usize,
    pub n_burnin: usize,
    pub n_thinning: usize,
    pub n_lambda: usize,
    pub lambda_ratio: f64,
    /// `None` selects `STEP_SCALE_AUTO / sqrt(d)`.
    pub step_scale: Option<f64>,
    pub p_refresh: f64,
    pub flip_correction: bool,
    /// `None` selects twice the chain length `n`.
    pub bpf_particles: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSection {
    pub t: usize,
    pub trials: usize,
    pub seed: u64,
    /// Record wall-clock times; off gives byte-reproducible reports.
    pub timing: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelSection,
    pub filter: FilterSection,
    pub run: RunSection,
}

/// A constructed model of either kind.
#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum BuiltModel {
    Gaussian(LinearGaussianModel),
    GhPoisson(GhPoissonModel),
}

impl BuiltModel {
    pub fn as_dyn(&self) -> &dyn StateSpaceModel {
        match self {
            BuiltModel::Gaussian(m) => m,
            BuiltModel::GhPoisson(m) => m,
        }
    }

    pub fn gaussian(&self) -> Option<&LinearGaussianModel> {
        match self {
            BuiltModel::Gaussian(m) => Some(m),
            BuiltModel::GhPoisson(_) => None,
        }
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: ModelSection {
                kind: ModelKind::Gaussian,
                d: 16,
                alpha: 0.9,
                sigma_y2: 1.0,
                alpha0: 3.0,
                alpha1: 0.01,
                beta: 20.0,
                nu: 7.0,
                gamma: 0.3,
                m1: 1.0,
                m2: 1.0 / 3.0,
            },
            filter: FilterSection {
                methods: vec![Method::Kf, Method::DzzEdh, Method::DbpsEdh, Method::Bpf],
                n: 500,
                n_burnin: 100,
                n_thinning: 10,
                n_lambda: 29,
                lambda_ratio: 1.2,
                step_scale: None,
                p_refresh: 0.1,
                flip_correction: true,
                bpf_particles: None,
            },
            run: RunSection {
                t: 10,
                trials: 20,
                seed: 1,
                timing: true,
            },
        }
    }
}

/// Names accepted by [`preset`].
pub const PRESETS: [&str; 6] = [
    "table1-d64-sy1",
    "table1-d64-sy2",
    "table1-d144-sy1",
    "table1-d144-sy2",
    "table2-d144",
    "table2-d400",
];

/// Benchmark presets: the reference model constants at desk-scale particle counts and trials.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let mut c = ExperimentConfig::default();
    let table1 = |c: &mut ExperimentConfig, d: usize, sy2: f64| {
        c.model.kind = ModelKind::Gaussian;
        c.model.d = d;
        c.model.sigma_y2 = sy2;
        c.filter.methods = vec![Method::Kf, Method::DzzEdh, Method::DbpsEdh, Method::Bpf];
        c.filter.bpf_particles = Some(1000);
    };
    let table2 = |c: &mut ExperimentConfig, d: usize| {
        c.model.kind = ModelKind::GhPoisson;
        c.model.d = d;
        c.filter.methods = vec![Method::DzzEdh, Method::DbpsEdh, Method::Bpf];
        c.filter.bpf_particles = Some(2000);
        c.run.trials = 10;
    };
    match name {
        "table1-d64-sy1" => table1(&mut c, 64, 1.0),
        "table1-d64-sy2" => table1(&mut c, 64, 2.0),
        "table1-d144-sy1" => table1(&mut c, 144, 1.0),
        "table1-d144-sy2" => table1(&mut c, 144, 2.0),
        "table2-d144" => table2(&mut c, 144),
        "table2-d400" => table2(&mut c, 400),
        _ => {
            return Err(Error::config(
                "preset",
                format!("unknown preset '{name}' (known: {})", PRESETS.join(", ")),
            ))
        }
    }
    Ok(c)
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::config(key, format!("cannot parse '{v}'")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::config(
            key,
            format!("expected true or false, got '{v}'"),
        )),
    }
}

impl ExperimentConfig {
    /// Parse a config file; see the module docs for the format.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("file", format!("{}: {e}", path.display())))?;
        Self::parse_str(&text)
    }

    pub fn parse_str(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen: Vec<String> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::config(
                    "file",
                    format!("line {}: expected 'key = value'", lineno + 1),
                )
            })?;
            let (key, value) = (key.trim(), value.trim());
            if seen.iter().any(|k| k == key) {
                return Err(Error::config(key, "given more than once"));
            }
            if key == "preset" {
                if !seen.is_empty() {
                    return Err(Error::config("preset", "must be the first setting"));
                }
                cfg = preset(value)?;
            } else {
                cfg.set(key, value)?;
            }
            seen.push(key.to_string());
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Set one key; values are validated later by [`validate`](Self::validate).
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let m = &mut self.model;
        let f = &mut self.filter;
        let r = &mut self.run;
        match key {
            "model.type" => {
                m.kind = match v {
                    "gaussian" => ModelKind::Gaussian,
                    "ghpoisson" => ModelKind::GhPoisson,
                    _ => return Err(Error::config(key, format!("unknown model '{v}'"))),
                }
            }
            "model.d" => m.d = parse_num(key, v)?,
            "model.alpha" => m.alpha = parse_num(key, v)?,
            "model.sigma_y2" => m.sigma_y2 = parse_num(key, v)?,
            "model.alpha0" => m.alpha0 = parse_num(key, v)?,
            "model.alpha1" => m.alpha1 = parse_num(key, v)?,
            "model.beta" => m.beta = parse_num(key, v)?,
            "model.nu" => m.nu = parse_num(key, v)?,
            "model.gamma" => m.gamma = parse_num(key, v)?,
            "model.m1" => m.m1 = parse_num(key, v)?,
            "model.m2" => m.m2 = parse_num(key, v)?,
            "filter.method" => {
                let mut methods = Vec::new();
                for name in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    let method = Method::parse(name)
                        .ok_or_else(|| Error::config(key, format!("unknown method '{name}'")))?;
                    if methods.contains(&method) {
                        return Err(Error::config(key, format!("'{name}' listed twice")));
                    }
                    methods.push(method);
                }
                f.methods = methods;
            }
            "filter.n" => f.n = parse_num(key, v)?,
            "filter.n_burnin" => f.n_burnin = parse_num(key, v)?,
            "filter.n_thinning" => f.n_thinning = parse_num(key, v)?,
            "filter.n_lambda" => f.n_lambda = parse_num(key, v)?,
            "filter.lambda_ratio" => f.lambda_ratio = parse_num(key, v)?,
            "filter.step_scale" => {
                f.step_scale = if v == "auto" {
                    None
                } else {
                    Some(parse_num(key, v)?)
                }
            }
            "filter.p_refresh" => f.p_refresh = parse_num(key, v)?,
            "filter.flip_correction" => f.flip_correction = parse_bool(key, v)?,
            "filter.bpf_particles" => f.bpf_particles = Some(parse_num(key, v)?),
            "run.t" => r.t = parse_num(key, v)?,
            "run.trials" => r.trials = parse_num(key, v)?,
            "run.seed" => r.seed = parse_num(key, v)?,
            "run.timing" => r.timing = parse_bool(key, v)?,
            _ => return Err(Error::config(key, "unknown key")),
        }
        Ok(())
    }

    /// Apply `key=value` overrides, then re-validate.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, overrides: &[S]) -> Result<()> {
        for o in overrides {
            let (k, v) = o.as_ref().split_once('=').ok_or_else(|| {
                Error::config("set", format!("expected key=value, got '{}'", o.as_ref()))
            })?;
            self.set(k.trim(), v.trim())?;
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.model;
        GridGeometry::square(m.d).map_err(|e| Error::config("model.d", e.to_string()))?;
        DispersionParams::new(m.alpha0, m.alpha1, m.beta)
            .map_err(|e| Error::config("model.alpha0", e.to_string()))?;
        if !m.alpha.is_finite() {
            return Err(Error::config("model.alpha", "must be finite"));
        }
        match m.kind {
            ModelKind::Gaussian => {
                if !(m.sigma_y2 > 0.0) || !m.sigma_y2.is_finite() {
                    return Err(Error::config("model.sigma_y2", "must be positive"));
                }
            }
            ModelKind::GhPoisson => {
                if !(m.nu > 4.0) {
                    return Err(Error::config("model.nu", "must exceed 4"));
                }
                if !(m.m1 > 0.0) {
                    return Err(Error::config("model.m1", "must be positive"));
                }
                if self.filter.methods.contains(&Method::Kf) {
                    return Err(Error::config(
                        "filter.method",
                        "kf needs model.type = gaussian",
                    ));
                }
            }
        }
        let f = &self.filter;
        if f.methods.is_empty() {
            return Err(Error::config(
                "filter.method",
                "at least one method is required",
            ));
        }
        if f.n == 0 {
            return Err(Error::config("filter.n", "must be at least 1"));
        }
        if f.n_thinning == 0 {
            return Err(Error::config("filter.n_thinning", "must be at least 1"));
        }
        if f.n_lambda == 0 {
            return Err(Error::config("filter.n_lambda", "must be at least 1"));
        }
        if !(f.lambda_ratio > 0.0) || !f.lambda_ratio.is_finite() {
            return Err(Error::config("filter.lambda_ratio", "must be positive"));
        }
        if let Some(s) = f.step_scale {
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::config(
                    "filter.step_scale",
                    "must be positive or 'auto'",
                ));
            }
        }
        if !(0.0..=1.0).contains(&f.p_refresh) {
            return Err(Error::config("filter.p_refresh", "must lie in [0, 1]"));
        }
        if self.bpf_particles() < 2 {
            return Err(Error::config("filter.bpf_particles", "must be at least 2"));
        }
        if self.run.t == 0 {
            return Err(Error::config("run.t", "must be at least 1"));
        }
        if self.run.trials == 0 {
            return Err(Error::config("run.trials", "must be at least 1"));
        }
        Ok(())
    }

    pub fn step_scale(&self) -> f64 {
        self.filter
            .step_scale
            .unwrap_or(STEP_SCALE_AUTO / (self.model.d as f64).sqrt())
    }

    pub fn bpf_particles(&self) -> usize {
        self.filter.bpf_particles.unwrap_or(2 * self.filter.n)
    }

    pub fn dispersion(&self) -> Result<DispersionParams> {
        DispersionParams::new(self.model.alpha0, self.model.alpha1, self.model.beta)
    }

    pub fn build_model(&self) -> Result<BuiltModel> {
        let m = &self.model;
        let disp = self.dispersion()?;
        Ok(match m.kind {
            ModelKind::Gaussian => BuiltModel::Gaussian(LinearGaussianModel::sensor_grid(
                m.d, m.alpha, m.sigma_y2, &disp,
            )?),
            ModelKind::GhPoisson => BuiltModel::GhPoisson(GhPoissonModel::sensor_grid(
                m.d, m.alpha, m.nu, m.gamma, m.m1, m.m2, &disp,
            )?),
        })
    }

    /// Engine configuration for one sequential MCMC method; `None` for the baselines.
    pub fn filter_config(&self, method: Method) -> Result<Option<FilterConfig>> {
        let Some((flow_mode, refinement)) = method.smcmc_parts() else {
            return Ok(None);
        };
        let f = &self.filter;
        Ok(Some(FilterConfig {
            n_particles: f.n,
            n_burnin: f.n_burnin,
            flow_mode,
            schedule: LambdaSchedule::geometric(f.n_lambda, f.lambda_ratio)?,
            kernel: KernelConfig {
                refinement,
                refine: RefineParams {
                    n_thinning: f.n_thinning,
                    step_scale: self.step_scale(),
                    p_refresh: f.p_refresh,
                    flip_correction: f.flip_correction,
                    force_accept: false,
                },
                force_accept: false,
            },
        }))
    }

    /// Every key with its resolved value, one `key = value` per line.
    pub fn to_text(&self) -> String {
        let m = &self.model;
        let f = &self.filter;
        let r = &self.run;
        let methods: Vec<&str> = f.methods.iter().map(|m| m.name()).collect();
        let step = match f.step_scale {
            Some(s) => s.to_string(),
            None => "auto".to_string(),
        };
        format!(
            "model.type = {}\nmodel.d = {}\nmodel.alpha = {}\nmodel.sigma_y2 = {}\n\
             model.alpha0 = {}\nmodel.alpha1 = {}\nmodel.beta = {}\nmodel.nu = {}\n\
             model.gamma = {}\nmodel.m1 = {}\nmodel.m2 = {}\n\
             filter.method = {}\nfilter.n = {}\nfilter.n_burnin = {}\nfilter.n_thinning = {}\n\
             filter.n_lambda = {}\nfilter.lambda_ratio = {}\nfilter.step_scale = {}\n\
             filter.p_refresh = {}\nfilter.flip_correction = {}\nfilter.bpf_particles = {}\n\
             run.t = {}\nrun.trials = {}\nrun.seed = {}\nrun.timing = {}\n",
            m.kind.name(),
            m.d,
            m.alpha,
            m.sigma_y2,
            m.alpha0,
            m.alpha1,
            m.beta,
            m.nu,
            m.gamma,
            m.m1,
            m.m2,
            methods.join(","),
            f.n,
            f.n_burnin,
            f.n_thinning,
            f.n_lambda,
            f.lambda_ratio,
            step,
            f.p_refresh,
            f.flip_correction,
            self.bpf_particles(),
            r.t,
            r.trials,
            r.seed,
            r.timing,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = ExperimentConfig::parse_str("model.type = gaussian\n").unwrap();
        assert_eq!(c.filter.n, 500);
        assert_eq!(c.filter.n_burnin, 100);
        assert_eq!(c.filter.n_lambda, 29);
        assert_eq!(c.filter.lambda_ratio, 1.2);
        assert_eq!(c.filter.n_thinning, 10);
        assert_eq!(c.filter.p_refresh, 0.1);
        assert_eq!(c.run.t, 10);
    }

    #[test]
    fn non_square_dimension_is_rejected() {
        let e = ExperimentConfig::parse_str("model.d = 10").unwrap_err();
        assert!(matches!(e, Error::Config { ref key, .. } if key == "model.d"));
    }

    #[test]
    fn unknown_and_repeated_keys_are_rejected() {
        assert!(ExperimentConfig::parse_str("model.colour = red").is_err());
        assert!(ExperimentConfig::parse_str("run.t = 3\nrun.t = 4").is_err());
        assert!(ExperimentConfig::parse_str("just words").is_err());
    }

    #[test]
    fn comments_and_preset_line() {
        let c = ExperimentConfig::parse_str(
            "# header\npreset = table2-d144  # grid\n\nrun.trials = 2\n",
        )
        .unwrap();
        assert_eq!(c.model.kind, ModelKind::GhPoisson);
        assert_eq!(c.run.trials, 2);
        assert!(ExperimentConfig::parse_str("run.t = 3\npreset = table2-d144").is_err());
    }

    #[test]
    fn text_round_trip() {
        let c = preset("table1-d144-sy2").unwrap();
        assert_eq!(ExperimentConfig::parse_str(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn kf_requires_gaussian_model() {
        assert!(ExperimentConfig::parse_str("model.type = ghpoisson\nfilter.method = kf").is_err());
    }
}
