//! Monte Carlo experiments over the model presets, flat `key = value`
//! configuration, and CSV reporting.

mod config;
pub mod csvio;
mod experiments;

pub use config::{default_times, ExperimentConfig, CONFIG_KEYS, DEFAULT_GRID_POINTS, DEFAULT_K};
pub use experiments::{
    moments, run_consistency_sweep, run_efmqe_experiment, run_normality_check, true_precision,
    CemqeRow, EfmqeRow, Estimator, MetricsReport, NormalityRow, SweepRow, NORMALITY_FREQUENCIES,
};
