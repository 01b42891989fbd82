use std::fmt;

use log::warn;

use crate::arh::simulate_path;
use crate::basis::{synthesize, Grid, HFunction};
use crate::error::Result;
use crate::gls::{gls_estimate, normalized_statistic, BlockPrecision};
use crate::model::ModelSpec;
use crate::parallel::map_indexed;
use crate::plugin::{
    autocorrelation_from_residuals, plugin_gls, predict_response, PluginFit, RhoHat,
};
use crate::spectral::{build_model_regressors, regression_mean, RegressorPanel};

use super::config::ExperimentConfig;

/// Number of leading frequencies summarized by the normality check.
pub const NORMALITY_FREQUENCIES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EfmqeRow {
    pub time: usize,
    pub efmqe: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CemqeRow {
    pub x: f64,
    pub time: usize,
    pub cemqe: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    Ols,
    Plugin,
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Estimator::Ols => "ols",
            Estimator::Plugin => "plugin",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub n: usize,
    pub estimator: Estimator,
    pub median_error: f64,
}

/// Summary of one normalized-statistic component; `frequency` and `param`
/// are 1-based.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalityRow {
    pub frequency: usize,
    pub param: usize,
    pub mean: f64,
    pub var: f64,
    pub skew: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsReport {
    pub efmqe: Vec<EfmqeRow>,
    pub cemqe: Vec<CemqeRow>,
    pub consistency: Vec<SweepRow>,
    pub normality: Vec<NormalityRow>,
    pub repetitions: usize,
    pub failed: usize,
}

/// Splits per-repetition results into successes and a failure count. Fails
/// only if every repetition failed.
fn collect<T>(results: Vec<Result<T>>, what: &str) -> Result<(Vec<T>, usize)> {
    let total = results.len();
    let mut ok = Vec::with_capacity(total);
    let mut first_err = None;
    for r in results {
        match r {
            Ok(v) => ok.push(v),
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    let failed = total - ok.len();
    if let Some(e) = first_err {
        if ok.is_empty() {
            return Err(e);
        }
        warn!(
            "{what}: {failed} of {total} repetitions failed and were excluded (first error: {e})"
        );
    }
    Ok((ok, failed))
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// In-sample prediction `Ŷ_t` from a fitted plug-in model, with `ρ̂`
/// re-estimated from the GLS residuals. At `t = 1` there is no preceding
/// residual and the regression mean is returned.
struct Predictor {
    fit: PluginFit,
    rho: RhoHat,
    eig: crate::plugin::EmpiricalEigen,
}

impl Predictor {
    fn new(fit: PluginFit) -> Result<Self> {
        let (eig, rho) = if fit.k_n == 0 {
            (fit.eig.clone(), RhoHat::zero())
        } else {
            autocorrelation_from_residuals(&fit.fit.residuals, fit.k_n)?
        };
        Ok(Self { fit, rho, eig })
    }

    fn predict(&self, panel: &RegressorPanel, time: usize) -> Result<HFunction> {
        if time == 1 {
            return regression_mean(panel.row(0), &self.fit.fit.beta_hat);
        }
        predict_response(
            panel.row(time - 1),
            &self.fit.fit,
            &self.rho,
            &self.eig,
            time,
        )
    }
}

fn squared_errors(actual: &HFunction, predicted: &HFunction, grid: &Grid) -> Result<Vec<f64>> {
    Ok(synthesize(&actual.sub(predicted)?, grid)?
        .into_iter()
        .map(|v| v * v)
        .collect())
}

fn efmqe_repetition(
    cfg: &ExperimentConfig,
    panel: &RegressorPanel,
    beta: &[HFunction],
    grid: &Grid,
    rep: usize,
) -> Result<Vec<Vec<f64>>> {
    let spec = cfg.model.arh_spec()?;
    let path = simulate_path(&spec, panel, beta, cfg.burn_in, cfg.seed, rep as u64)?;
    let y = &path.responses;
    let opts = cfg.plugin_options();
    if cfg.rolling {
        cfg.times
            .iter()
            .map(|&t| {
                let sub = panel.truncated(t - 1)?;
                let predictor = Predictor::new(plugin_gls(&sub, &y[..t - 1], &opts)?)?;
                squared_errors(&y[t - 1], &predictor.predict(panel, t)?, grid)
            })
            .collect()
    } else {
        let predictor = Predictor::new(plugin_gls(panel, y, &opts)?)?;
        cfg.times
            .iter()
            .map(|&t| squared_errors(&y[t - 1], &predictor.predict(panel, t)?, grid))
            .collect()
    }
}

/// EFMQE(n) and CEMQE(x, n) at the configured report times.
pub fn run_efmqe_experiment(cfg: &ExperimentConfig) -> Result<MetricsReport> {
    cfg.validate()?;
    let model = &cfg.model;
    let panel = build_model_regressors(model, cfg.n, model.k)?;
    let beta = model.beta();
    let grid = Grid::midpoints(model.interval, cfg.grid_points)?;

    let results = map_indexed(cfg.execution, cfg.reps, |rep| {
        efmqe_repetition(cfg, &panel, &beta, &grid, rep)
    });
    let (ok, failed) = collect(results, "efmqe experiment")?;

    let mut report = MetricsReport {
        repetitions: cfg.reps,
        failed,
        ..MetricsReport::default()
    };
    let used = ok.len() as f64;
    for (ti, &time) in cfg.times.iter().enumerate() {
        let mut total = 0.0;
        for (xi, &x) in grid.points().iter().enumerate() {
            let cemqe = ok.iter().map(|rep| rep[ti][xi]).sum::<f64>() / used;
            total += cemqe;
            report.cemqe.push(CemqeRow { x, time, cemqe });
        }
        report.efmqe.push(EfmqeRow {
            time,
            efmqe: total / grid.len() as f64,
        });
    }
    Ok(report)
}

/// Median `‖β̂_N − β‖` for OLS and plug-in GLS at each sample size. Paths are
/// nested: the sample at a smaller `N` is a prefix of the one at a larger `N`.
pub fn run_consistency_sweep(cfg: &ExperimentConfig) -> Result<MetricsReport> {
    cfg.validate()?;
    let model = &cfg.model;
    let n_max = *cfg.sample_sizes.last().expect("validated non-empty");
    let panel = build_model_regressors(model, n_max, model.k)?;
    let beta = model.beta();
    let spec = model.arh_spec()?;
    let opts = cfg.plugin_options();

    let results = map_indexed(cfg.execution, cfg.reps, |rep| -> Result<Vec<(f64, f64)>> {
        let path = simulate_path(&spec, &panel, &beta, cfg.burn_in, cfg.seed, rep as u64)?;
        cfg.sample_sizes
            .iter()
            .map(|&n| {
                let sub = panel.truncated(n)?;
                let fit = plugin_gls(&sub, &path.responses[..n], &opts)?;
                Ok((fit.ols.error_norm(&beta)?, fit.fit.error_norm(&beta)?))
            })
            .collect()
    });
    let (ok, failed) = collect(results, "consistency sweep")?;

    let mut report = MetricsReport {
        repetitions: cfg.reps,
        failed,
        ..MetricsReport::default()
    };
    for (i, &n) in cfg.sample_sizes.iter().enumerate() {
        let mut ols: Vec<f64> = ok.iter().map(|rep| rep[i].0).collect();
        let mut plugin: Vec<f64> = ok.iter().map(|rep| rep[i].1).collect();
        report.consistency.push(SweepRow {
            n,
            estimator: Estimator::Ols,
            median_error: median(&mut ols),
        });
        report.consistency.push(SweepRow {
            n,
            estimator: Estimator::Plugin,
            median_error: median(&mut plugin),
        });
    }
    Ok(report)
}

/// Known-covariance precision for a model. With zero noise the shape of the
/// unit-noise covariance is used; the estimate is unaffected by the scale.
pub fn true_precision(model: &ModelSpec, n: usize) -> Result<BlockPrecision> {
    let spec = if model.noise_scale > 0.0 {
        model.arh_spec()?
    } else {
        ModelSpec {
            noise_scale: 1.0,
            ..model.clone()
        }
        .arh_spec()?
    };
    BlockPrecision::build(&spec.stationary_covariance(), spec.rho(), n)
}

/// Componentwise mean, variance and skewness of the normalized GLS
/// statistic under the true covariance, for the leading frequencies.
pub fn run_normality_check(cfg: &ExperimentConfig) -> Result<MetricsReport> {
    cfg.validate()?;
    let model = &cfg.model;
    let panel = build_model_regressors(model, cfg.n, model.k)?;
    let beta = model.beta();
    let spec = model.arh_spec()?;
    let precision = true_precision(model, cfg.n)?;
    let opts = cfg.gls_options();
    let (p, freqs) = (model.p(), NORMALITY_FREQUENCIES.min(model.k));

    let results = map_indexed(cfg.execution, cfg.reps, |rep| -> Result<Vec<f64>> {
        let path = simulate_path(&spec, &panel, &beta, cfg.burn_in, cfg.seed, rep as u64)?;
        let fit = gls_estimate(&panel, &path.responses, &precision, &opts)?;
        let stat = normalized_statistic(&fit, &beta)?;
        Ok(stat[..freqs * p].to_vec())
    });
    let (ok, failed) = collect(results, "normality check")?;

    let mut report = MetricsReport {
        repetitions: cfg.reps,
        failed,
        ..MetricsReport::default()
    };
    for f in 0..freqs {
        for j in 0..p {
            let sample: Vec<f64> = ok.iter().map(|rep| rep[f * p + j]).collect();
            let (mean, var, skew) = moments(&sample);
            report.normality.push(NormalityRow {
                frequency: f + 1,
                param: j + 1,
                mean,
                var,
                skew,
            });
        }
    }
    Ok(report)
}

/// Sample mean, unbiased variance and moment skewness. Degenerate samples
/// report zero variance and skewness.
pub fn moments(sample: &[f64]) -> (f64, f64, f64) {
    let n = sample.len() as f64;
    let mean = sample.iter().sum::<f64>() / n;
    let m2 = sample.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let m3 = sample.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / n;
    let var = if sample.len() > 1 {
        m2 * n / (n - 1.0)
    } else {
        0.0
    };
    let skew = if m2 > 0.0 { m3 / m2.powf(1.5) } else { 0.0 };
    (mean, var, skew)
}
