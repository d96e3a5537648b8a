//! Plain-text `key=value` run configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use bubble_forge::constants::Normalization;
use bubble_forge::params::ModelParams;
use bubble_forge::quadrature::{QuadMethod, QuadratureSpec};
use bubble_forge::reduced::{BoxChoice, SolverMethod, SolverSpec};
use bubble_forge::validation::{Fault, CRITERIA};

/// Every accepted key.
pub const KEYS: &[&str] = &[
    "N",
    "m",
    "c0",
    "delta",
    "k",
    "tau",
    "eps1",
    "constants.normalization",
    "constants.tol",
    "quad.method",
    "quad.abs_tol",
    "quad.rel_tol",
    "quad.max_evals",
    "quad.seed",
    "quad.samples",
    "quad.inner_radius",
    "quad.inner_fraction",
    "quad.batches",
    "solver.method",
    "solver.tol",
    "solver.max_iter",
    "solver.box",
    "solver.sigma_hat",
    "solver.theta_bar",
    "solver.flow_step",
    "sweep.k",
    "sums.h",
    "sums.ring_h",
    "output.dir",
    "validate.fault",
    "validate.criteria",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigError { line: Some(l), message } => write!(f, "config line {l}: {message}"),
            ConfigError { line: None, message } => write!(f, "config: {message}"),
        }
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(line: Option<usize>, message: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError {
        line,
        message: message.into(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: ModelParams,
    pub normalization: Normalization,
    pub const_tol: f64,
    pub quad: QuadratureSpec,
    pub solver: SolverSpec,
    /// Overrides each command's default `k` sweep.
    pub k_list: Option<Vec<usize>>,
    /// Height for cross sums.
    pub sums_h: f64,
    /// Height for same-ring sums.
    pub sums_ring_h: f64,
    pub out_dir: PathBuf,
    pub fault: Option<Fault>,
    pub criteria: Option<Vec<String>>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            params: ModelParams::default(),
            normalization: Normalization::Bubble,
            const_tol: 1e-12,
            quad: QuadratureSpec::default(),
            solver: SolverSpec::default(),
            k_list: None,
            sums_h: 0.3,
            sums_ring_h: 0.0,
            out_dir: PathBuf::from("out"),
            fault: None,
            criteria: None,
        }
    }
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError {
                line: None,
                message: format!("cannot read {}: {e}", path.display()),
            })?;
        Self::parse(&text)
    }

    /// Parses `key=value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut kv: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return err(Some(no), format!("expected key=value, got {line:?}"));
            };
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                return err(Some(no), "missing key");
            }
            if !KEYS.contains(&key) {
                return err(Some(no), format!("unknown key {key:?}"));
            }
            if value.is_empty() {
                return err(Some(no), format!("missing value for {key}"));
            }
            if kv.insert(key, (no, value)).is_some() {
                return err(Some(no), format!("duplicate key {key}"));
            }
        }
        let mut cfg = RunConfig::default();
        let get = |key: &str| kv.get(key).copied();

        fn num<T: std::str::FromStr>(e: Option<(usize, &str)>, key: &str) -> Result<Option<T>, ConfigError> {
            match e {
                None => Ok(None),
                Some((no, v)) => v.parse().map(Some).map_err(|_| ConfigError {
                    line: Some(no),
                    message: format!("cannot parse {v:?} for {key}"),
                }),
            }
        }

        let d = cfg.params;
        let n = num(get("N"), "N")?.unwrap_or(d.n);
        let m = num(get("m"), "m")?.unwrap_or(d.m);
        let c0 = num(get("c0"), "c0")?.unwrap_or(d.c0);
        let delta = num(get("delta"), "delta")?.unwrap_or(d.delta);
        let k = num(get("k"), "k")?.unwrap_or(d.k);
        let eps1 = num(get("eps1"), "eps1")?.unwrap_or(d.eps1);
        let mut params = ModelParams::with_k(n, m, c0, delta, k, eps1);
        if let Some(t) = num(get("tau"), "tau")? {
            params.tau = t;
        }
        params.validate().map_err(|e| ConfigError {
            line: None,
            message: e.to_string(),
        })?;
        cfg.params = params;

        if let Some((no, v)) = get("constants.normalization") {
            cfg.normalization = v.parse().map_err(|e: bubble_forge::Error| ConfigError {
                line: Some(no),
                message: e.to_string(),
            })?;
        }
        positive(&mut cfg.const_tol, get("constants.tol"), "constants.tol")?;

        let q = &mut cfg.quad;
        if let Some((no, v)) = get("quad.method") {
            q.method = match v {
                "monte-carlo" => QuadMethod::MonteCarlo,
                "adaptive-grid" => QuadMethod::AdaptiveGrid,
                _ => return err(Some(no), format!("quad.method {v:?} is neither monte-carlo nor adaptive-grid")),
            };
        }
        positive(&mut q.abs_tol, get("quad.abs_tol"), "quad.abs_tol")?;
        positive(&mut q.rel_tol, get("quad.rel_tol"), "quad.rel_tol")?;
        count(&mut q.max_evals, get("quad.max_evals"), "quad.max_evals")?;
        if let Some(s) = num(get("quad.seed"), "quad.seed")? {
            q.seed = s;
        }
        count(&mut q.samples, get("quad.samples"), "quad.samples")?;
        positive(&mut q.strata.inner_radius, get("quad.inner_radius"), "quad.inner_radius")?;
        if let Some(f) = num::<f64>(get("quad.inner_fraction"), "quad.inner_fraction")? {
            if !(f > 0.0 && f < 1.0) {
                return err(get("quad.inner_fraction").map(|e| e.0), "quad.inner_fraction must lie in (0, 1)");
            }
            q.strata.inner_fraction = f;
        }
        count(&mut q.strata.batches, get("quad.batches"), "quad.batches")?;

        let s = &mut cfg.solver;
        if let Some((no, v)) = get("solver.method") {
            s.method = match v {
                "newton" => SolverMethod::Newton,
                "gradient-flow" => SolverMethod::GradientFlow,
                _ => return err(Some(no), format!("solver.method {v:?} is neither newton nor gradient-flow")),
            };
        }
        positive(&mut s.tol, get("solver.tol"), "solver.tol")?;
        count(&mut s.max_iter, get("solver.max_iter"), "solver.max_iter")?;
        positive(&mut s.theta_bar, get("solver.theta_bar"), "solver.theta_bar")?;
        positive(&mut s.flow_step, get("solver.flow_step"), "solver.flow_step")?;
        let mut sigma = 0.2;
        positive(&mut sigma, get("solver.sigma_hat"), "solver.sigma_hat")?;
        match get("solver.box") {
            None | Some((_, "shrinking")) => {
                if let Some((no, _)) = get("solver.sigma_hat") {
                    return err(Some(no), "solver.sigma_hat needs solver.box=fixed");
                }
            }
            Some((_, "fixed")) => s.box_choice = BoxChoice::Fixed(sigma),
            Some((no, v)) => return err(Some(no), format!("solver.box {v:?} is neither shrinking nor fixed")),
        }

        if let Some((no, v)) = get("sweep.k") {
            let ks: Result<Vec<usize>, _> = v.split(',').map(|t| t.trim().parse::<usize>()).collect();
            let ks = ks.map_err(|_| ConfigError {
                line: Some(no),
                message: format!("sweep.k {v:?} is not a comma-separated list of integers"),
            })?;
            if ks.iter().any(|&k| k < 2) || ks.windows(2).any(|w| w[1] <= w[0]) {
                return err(Some(no), "sweep.k must be strictly increasing with every k >= 2");
            }
            cfg.k_list = Some(ks);
        }
        if let Some(h) = num::<f64>(get("sums.h"), "sums.h")? {
            if !(h > 0.0 && h < 1.0) {
                return err(get("sums.h").map(|e| e.0), "sums.h must lie in (0, 1)");
            }
            cfg.sums_h = h;
        }
        if let Some(h) = num::<f64>(get("sums.ring_h"), "sums.ring_h")? {
            if !(0.0..1.0).contains(&h) {
                return err(get("sums.ring_h").map(|e| e.0), "sums.ring_h must lie in [0, 1)");
            }
            cfg.sums_ring_h = h;
        }
        if let Some((_, v)) = get("output.dir") {
            cfg.out_dir = PathBuf::from(v);
        }
        if let Some((no, v)) = get("validate.fault") {
            let Some((name, factor)) = v.split_once(':') else {
                return err(Some(no), "validate.fault must look like B0:1.1");
            };
            let factor: f64 = factor.trim().parse().map_err(|_| ConfigError {
                line: Some(no),
                message: format!("cannot parse fault factor {factor:?}"),
            })?;
            cfg.fault = Some(Fault::new(name.trim(), factor).map_err(|e| ConfigError {
                line: Some(no),
                message: e.to_string(),
            })?);
        }
        if let Some((no, v)) = get("validate.criteria") {
            let ids: Vec<String> = v.split(',').map(|t| t.trim().to_string()).collect();
            if let Some(bad) = ids.iter().find(|i| !CRITERIA.iter().any(|(c, _)| c == i)) {
                return err(Some(no), format!("unknown criterion {bad:?}"));
            }
            cfg.criteria = Some(ids);
        }
        Ok(cfg)
    }

    /// Creates the output directory and proves it writable.
    pub fn check_output(&self) -> Result<(), ConfigError> {
        let fail = |e: std::io::Error| ConfigError {
            line: None,
            message: format!("output directory {} not writable: {e}", self.out_dir.display()),
        };
        std::fs::create_dir_all(&self.out_dir).map_err(fail)?;
        tempfile::NamedTempFile::new_in(&self.out_dir).map_err(fail)?;
        Ok(())
    }
}

fn positive(slot: &mut f64, e: Option<(usize, &str)>, key: &str) -> Result<(), ConfigError> {
    if let Some((no, v)) = e {
        match v.parse::<f64>() {
            Ok(x) if x > 0.0 && x.is_finite() => *slot = x,
            _ => return err(Some(no), format!("{key} must be a positive number, got {v:?}")),
        }
    }
    Ok(())
}

fn count(slot: &mut usize, e: Option<(usize, &str)>, key: &str) -> Result<(), ConfigError> {
    if let Some((no, v)) = e {
        match v.parse::<usize>() {
            Ok(x) if x > 0 => *slot = x,
            _ => return err(Some(no), format!("{key} must be a positive integer, got {v:?}")),
        }
    }
    Ok(())
}
