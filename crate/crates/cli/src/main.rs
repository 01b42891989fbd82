use std::path::{Path, PathBuf};
use std::process::ExitCode;

use arhgls::arh::simulate_path;
use arhgls::basis::{synthesize, Grid, HFunction};
use arhgls::harness::csvio::{self, from_file, to_file};
use arhgls::harness::{
    run_consistency_sweep, run_efmqe_experiment, run_normality_check, ExperimentConfig,
    MetricsReport,
};
use arhgls::parallel::configure_threads;
use arhgls::plugin::{plugin_gls, predict_response, PluginFit, Truncation, Weighting};
use arhgls::spectral::{build_model_regressors, RegressorPanel};
use arhgls::{Error, Result};
use clap::{Parser, Subcommand};

const THREADS_ENV: &str = "ARHGLS_THREADS";

/// Regression with ARH(1)-correlated functional errors: simulation, GLS
/// fitting, forecasting and Monte Carlo experiments.
#[derive(Debug, Parser)]
#[command(name = "arhgls", version)]
struct Cli {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true, value_name = "INT")]
    seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    /// Worker threads; falls back to ARHGLS_THREADS.
    #[arg(long, global = true, value_name = "INT")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one sample path: responses.csv, errors.csv, regressors.csv
    /// (including time N+1) and beta.csv.
    Simulate,
    /// Plug-in GLS fit of responses.csv on regressors.csv: beta_hat.csv and
    /// diagnostics.csv.
    Fit {
        /// Directory holding the input CSVs [default: --out].
        #[arg(long, value_name = "DIR")]
        data: Option<PathBuf>,
    },
    /// One-step-ahead forecast of time N+1: forecast.csv and
    /// forecast_grid.csv. regressors.csv must include time N+1.
    Predict {
        #[arg(long, value_name = "DIR")]
        data: Option<PathBuf>,
    },
    /// EFMQE table: efmqe.csv and cemqe.csv.
    Experiment {
        /// Forecast each report time from a fit on the preceding data.
        #[arg(long)]
        rolling: bool,
    },
    /// Consistency sweep over the configured Ns: sweep.csv.
    Sweep,
    /// Normality of the known-covariance GLS statistic: normality.csv.
    Normality,
}

/// Usage and configuration problems exit with 1, numerical failures with 2.
enum Failure {
    Usage(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(2)
        }
    }
}

fn thread_count(flag: Option<usize>) -> std::result::Result<Option<usize>, Failure> {
    let raw = match flag {
        Some(n) => Some(n),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => Some(
                v.trim()
                    .parse()
                    .map_err(|_| Failure::Usage(format!("{THREADS_ENV}: cannot parse `{v}`")))?,
            ),
            Err(_) => None,
        },
    };
    if raw == Some(0) {
        return Err(Failure::Usage("thread count must be positive".into()));
    }
    Ok(raw)
}

fn run(cli: Cli) -> std::result::Result<(), Failure> {
    if let Some(n) = thread_count(cli.threads)? {
        if !configure_threads(n) {
            log::info!("thread pool unavailable; running with the default executor");
        }
    }
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_path(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    std::fs::create_dir_all(&cli.out)
        .map_err(|e| Failure::Usage(format!("{}: {e}", cli.out.display())))?;
    let out = cli.out.as_path();

    match cli.command {
        Command::Simulate => simulate(&cfg, out)?,
        Command::Fit { data } => fit(&cfg, data.as_deref().unwrap_or(out), out)?,
        Command::Predict { data } => predict(&cfg, data.as_deref().unwrap_or(out), out)?,
        Command::Experiment { rolling } => {
            cfg.rolling |= rolling;
            cfg.validate()?;
            let report = run_efmqe_experiment(&cfg)?;
            note_failures(&report);
            to_file(&out.join("efmqe.csv"), |w| csvio::write_efmqe(w, &report))?;
            to_file(&out.join("cemqe.csv"), |w| csvio::write_cemqe(w, &report))?;
        }
        Command::Sweep => {
            let report = run_consistency_sweep(&cfg)?;
            note_failures(&report);
            to_file(&out.join("sweep.csv"), |w| csvio::write_sweep(w, &report))?;
        }
        Command::Normality => {
            let report = run_normality_check(&cfg)?;
            note_failures(&report);
            to_file(&out.join("normality.csv"), |w| {
                csvio::write_normality(w, &report)
            })?;
        }
    }
    Ok(())
}

fn note_failures(report: &MetricsReport) {
    if report.failed > 0 {
        eprintln!(
            "{} of {} repetitions failed and were excluded",
            report.failed, report.repetitions
        );
    }
}

fn simulate(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let model = &cfg.model;
    let extended = build_model_regressors(model, cfg.n + 1, model.k)?;
    let panel = extended.truncated(cfg.n)?;
    let beta = model.beta();
    let path = simulate_path(&model.arh_spec()?, &panel, &beta, cfg.burn_in, cfg.seed, 0)?;
    to_file(&out.join("responses.csv"), |w| {
        csvio::write_series(w, &path.responses)
    })?;
    to_file(&out.join("errors.csv"), |w| {
        csvio::write_series(w, &path.errors)
    })?;
    to_file(&out.join("regressors.csv"), |w| {
        csvio::write_regressors(w, &extended)
    })?;
    to_file(&out.join("beta.csv"), |w| csvio::write_beta(w, &beta))
}

/// Responses and the regressor panel; the panel may run one step past the
/// last response.
fn load(cfg: &ExperimentConfig, data: &Path) -> Result<(Vec<HFunction>, RegressorPanel)> {
    let interval = cfg.model.interval;
    let y = from_file(&data.join("responses.csv"), |r| {
        csvio::read_series(r, interval)
    })?;
    let panel = RegressorPanel::new(from_file(&data.join("regressors.csv"), |r| {
        csvio::read_regressors(r)
    })?)?;
    if panel.n() < y.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} responses but regressors only for {} times",
            y.len(),
            panel.n()
        )));
    }
    Ok((y, panel))
}

fn fit_panel(cfg: &ExperimentConfig, y: &[HFunction], panel: &RegressorPanel) -> Result<PluginFit> {
    let mut opts = cfg.plugin_options();
    if let Truncation::Fixed(k) = opts.truncation {
        opts.truncation = Truncation::Fixed(k.min(panel.k()));
    }
    plugin_gls(&panel.truncated(y.len())?, y, &opts)
}

fn fit(cfg: &ExperimentConfig, data: &Path, out: &Path) -> Result<()> {
    let (y, panel) = load(cfg, data)?;
    let fit = fit_panel(cfg, &y, &panel)?;
    let weighting = match fit.weighting {
        Weighting::Unweighted => "unweighted",
        Weighting::Diagonal => "diagonal",
        Weighting::Var => "var",
    };
    let deficient: Vec<String> = fit
        .fit
        .deficient_frequencies
        .iter()
        .map(usize::to_string)
        .collect();
    let pairs: Vec<(String, String)> = [
        ("N", y.len().to_string()),
        ("K", panel.k().to_string()),
        ("p", panel.p().to_string()),
        ("k_N", fit.k_n.to_string()),
        ("weighting", weighting.to_string()),
        ("loss", format!("{:e}", fit.fit.loss)),
        (
            "rho_hat_off_diagonal_ratio",
            format!("{:e}", fit.rho_hat.off_diagonal_ratio()),
        ),
        ("deficient_frequencies", deficient.join(";")),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    to_file(&out.join("beta_hat.csv"), |w| {
        csvio::write_beta(w, &fit.fit.beta_hat)
    })?;
    to_file(&out.join("diagnostics.csv"), |w| {
        csvio::write_key_values(w, &pairs)
    })
}

fn predict(cfg: &ExperimentConfig, data: &Path, out: &Path) -> Result<()> {
    let (y, panel) = load(cfg, data)?;
    let n = y.len();
    if panel.n() < n + 1 {
        return Err(Error::DimensionMismatch(format!(
            "forecasting time {} needs regressors for that time",
            n + 1
        )));
    }
    let fit = fit_panel(cfg, &y, &panel)?;
    let forecast = predict_response(panel.row(n), &fit.fit, &fit.rho_hat, &fit.eig, n + 1)?;
    let grid = Grid::midpoints(cfg.model.interval, cfg.grid_points)?;
    let values = synthesize(&forecast, &grid)?;
    let coeffs = forecast
        .coeffs()
        .iter()
        .enumerate()
        .map(|(k, c)| vec![(k + 1).to_string(), format!("{c:e}")]);
    to_file(&out.join("forecast.csv"), |w| {
        csvio::write_table(w, &["mode", "coefficient"], coeffs)
    })?;
    let points = grid
        .points()
        .iter()
        .zip(&values)
        .map(|(x, v)| vec![format!("{x:e}"), format!("{v:e}")]);
    to_file(&out.join("forecast_grid.csv"), |w| {
        csvio::write_table(w, &["x", "value"], points)
    })
}
