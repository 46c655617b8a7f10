//! Fitting, configuration and result files.

pub mod config;
pub mod fit;
pub mod output;

pub use config::{schema_table, Config, ConfigError};
pub use fit::{
    binomial, bootstrap, fit_decay, fit_fringe, fit_gaussian, fit_linear, fit_power_law, Dataset, DecayForm, FitError, FitResult, Model,
    BOOTSTRAP_RESAMPLES,
};
pub use output::{points_csv, source_date_epoch, to_json, write_results, RunManifest};
