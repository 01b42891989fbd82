use std::collections::HashMap;
use std::path::Path;

use crate::basis::Interval;
use crate::error::{Error, Result};
use crate::gls::{GlsOptions, RankPolicy};
use crate::model::{ModelName, ModelSpec, PowerLaw, RegressorLaw};
use crate::parallel::Execution;
use crate::plugin::{PluginOptions, Truncation, TruncationRule};

pub const DEFAULT_K: usize = 50;
pub const DEFAULT_GRID_POINTS: usize = 60;

/// Every key accepted in a config file.
pub const CONFIG_KEYS: &[&str] = &[
    "model",
    "N",
    "r",
    "k_N",
    "K",
    "M",
    "seed",
    "times",
    "a",
    "b",
    "tau",
    "noise_scale",
    "burn_in",
    "rolling",
    "Ns",
    "rho_exponent",
    "rdelta_exponent",
    "r0_exponent",
    "regressors",
    "beta",
    "rank_policy",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub n: usize,
    pub reps: usize,
    pub truncation: Truncation,
    pub tau: f64,
    pub grid_points: usize,
    pub seed: u64,
    /// 1-based report times.
    pub times: Vec<usize>,
    pub burn_in: usize,
    /// Forecast each report time from a fit on the preceding observations
    /// instead of using the full-sample fit.
    pub rolling: bool,
    pub sample_sizes: Vec<usize>,
    pub rank_policy: RankPolicy,
    pub execution: Execution,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let n = 200;
        Self {
            model: ModelSpec::model1(DEFAULT_K),
            n,
            reps: 100,
            truncation: Truncation::Fixed(4),
            tau: 1.0,
            grid_points: DEFAULT_GRID_POINTS,
            seed: 0,
            times: default_times(n),
            burn_in: 0,
            rolling: false,
            sample_sizes: vec![200, 600, 1000],
            rank_policy: RankPolicy::MinimumNorm,
            execution: Execution::Parallel,
        }
    }
}

/// Multiples of 10 up to `n`, or every time when `n < 10`.
pub fn default_times(n: usize) -> Vec<usize> {
    if n < 10 {
        (1..=n).collect()
    } else {
        (10..=n).step_by(10).collect()
    }
}

fn bad(key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        message: message.into(),
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str, what: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| bad(key, format!("cannot parse `{value}` as {what}")))
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str, what: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s, what))
        .collect()
}

fn canonical_key(raw: &str) -> Option<&'static str> {
    CONFIG_KEYS
        .iter()
        .copied()
        .find(|k| k.eq_ignore_ascii_case(raw))
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_text(&text)
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut entries: HashMap<&'static str, String> = HashMap::new();
        for raw in text.lines() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(line, "expected `key = value`"))?;
            let key = key.trim();
            let canonical = canonical_key(key).ok_or_else(|| bad(key, "unknown key"))?;
            if entries
                .insert(canonical, value.trim().to_string())
                .is_some()
            {
                return Err(bad(canonical, "given more than once"));
            }
        }
        Self::from_entries(&entries)
    }

    fn from_entries(entries: &HashMap<&'static str, String>) -> Result<Self> {
        let get = |k: &str| entries.get(k).map(String::as_str);
        let mut cfg = Self::default();

        let k = match get("K") {
            Some(v) => parse("K", v, "a positive integer")?,
            None => DEFAULT_K,
        };
        let name = match get("model") {
            Some(v) => v
                .parse::<ModelName>()
                .map_err(|e| bad("model", e.to_string()))?,
            None => ModelName::Model1,
        };
        cfg.model = ModelSpec::preset(name, k);

        if let Some(v) = get("N") {
            cfg.n = parse("N", v, "an integer")?;
        }
        if let Some(v) = get("r") {
            cfg.reps = parse("r", v, "an integer")?;
        }
        if let Some(v) = get("k_N") {
            cfg.truncation = if v.eq_ignore_ascii_case("auto") {
                Truncation::Auto
            } else {
                Truncation::Fixed(parse("k_N", v, "an integer or `auto`")?)
            };
        }
        if let Some(v) = get("M") {
            cfg.grid_points = parse("M", v, "an integer")?;
        }
        if let Some(v) = get("seed") {
            cfg.seed = parse("seed", v, "an unsigned integer")?;
        }
        cfg.times = match get("times") {
            Some(v) => parse_list("times", v, "a list of integers")?,
            None => default_times(cfg.n),
        };
        let a = match get("a") {
            Some(v) => parse("a", v, "a number")?,
            None => cfg.model.interval.a(),
        };
        let b = match get("b") {
            Some(v) => parse("b", v, "a number")?,
            None => cfg.model.interval.b(),
        };
        cfg.model.interval = Interval::new(a, b).map_err(|e| bad("b", e.to_string()))?;
        if let Some(v) = get("tau") {
            cfg.tau = parse("tau", v, "a number")?;
        }
        if let Some(v) = get("noise_scale") {
            cfg.model.noise_scale = parse("noise_scale", v, "a number")?;
        }
        if let Some(v) = get("burn_in") {
            cfg.burn_in = parse("burn_in", v, "an integer")?;
        }
        if let Some(v) = get("rolling") {
            cfg.rolling = parse("rolling", v, "true or false")?;
        }
        if let Some(v) = get("Ns") {
            cfg.sample_sizes = parse_list("Ns", v, "a list of integers")?;
        }
        if let Some(v) = get("rho_exponent") {
            cfg.model.rho = PowerLaw::shifted(parse("rho_exponent", v, "a number")?);
        }
        if let Some(v) = get("rdelta_exponent") {
            cfg.model.r_delta = PowerLaw::shifted(parse("rdelta_exponent", v, "a number")?);
        }
        if let Some(v) = get("r0_exponent") {
            cfg.model.r0 = PowerLaw::shifted(parse("r0_exponent", v, "a number")?);
        }
        if let Some(v) = get("regressors") {
            cfg.model.regressors = v
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<RegressorLaw>()
                        .map_err(|e| bad("regressors", e))
                })
                .collect::<Result<_>>()?;
        }
        if let Some(v) = get("beta") {
            let exps: Vec<f64> = parse_list("beta", v, "a list of numbers")?;
            cfg.model.beta = exps.into_iter().map(PowerLaw::shifted).collect();
        }
        if let Some(v) = get("rank_policy") {
            cfg.rank_policy = match v.to_ascii_lowercase().as_str() {
                "strict" => RankPolicy::Strict,
                "minimum_norm" => RankPolicy::MinimumNorm,
                _ => {
                    return Err(bad(
                        "rank_policy",
                        format!("expected `strict` or `minimum_norm`, got `{v}`"),
                    ))
                }
            };
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.model.k == 0 {
            return Err(bad("K", "must be positive"));
        }
        if self.model.regressors.len() != self.model.beta.len() {
            return Err(bad(
                "beta",
                format!(
                    "{} laws given for {} regressors",
                    self.model.beta.len(),
                    self.model.regressors.len()
                ),
            ));
        }
        self.model
            .validate()
            .map_err(|e| bad("model", e.to_string()))?;
        if self.n < 3 {
            return Err(bad("N", "must be at least 3"));
        }
        if self.reps == 0 {
            return Err(bad("r", "must be at least 1"));
        }
        if let Truncation::Fixed(k) = self.truncation {
            if k == 0 || k > self.model.k.min(self.n) {
                return Err(bad(
                    "k_N",
                    format!("must lie in 1..={}", self.model.k.min(self.n)),
                ));
            }
        }
        if self.grid_points == 0 {
            return Err(bad("M", "must be positive"));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(bad("tau", "must be a positive number"));
        }
        let first = if self.rolling { 4 } else { 1 };
        if self.times.is_empty() {
            return Err(bad("times", "no report times"));
        }
        if let Some(t) = self.times.iter().find(|&&t| t < first || t > self.n) {
            return Err(bad(
                "times",
                format!("time {t} is outside {first}..={}", self.n),
            ));
        }
        if self.sample_sizes.is_empty() || self.sample_sizes.iter().any(|&n| n < 3) {
            return Err(bad("Ns", "needs sample sizes of at least 3"));
        }
        if self.sample_sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(bad("Ns", "sample sizes must be strictly increasing"));
        }
        Ok(())
    }

    pub fn gls_options(&self) -> GlsOptions {
        GlsOptions {
            rank_policy: self.rank_policy,
            execution: Execution::Sequential,
            ..GlsOptions::default()
        }
    }

    pub fn plugin_options(&self) -> PluginOptions {
        PluginOptions {
            truncation: self.truncation,
            rule: TruncationRule {
                threshold: self.tau,
                ..TruncationRule::default()
            },
            gls: self.gls_options(),
            ..PluginOptions::default()
        }
    }
}
