//! Configuration, orchestration and CSV output for price tables and the
//! parameter studies.

mod config;
mod output;
mod run;

pub use config::{
    apply_override, BackendKind, DeepPair, ExperimentConfig, KernelPair, LinearPair, Sampling, Studies, PRESETS,
    VERSION,
};
pub use output::{csv_string, timings_path, write_study};
pub use run::{
    aggregate, price_once, run_correlation_study, run_discretization_study, run_feature_importance, run_price_table,
    run_ridge_sweep, run_sample_size_study, Aggregate, ImportanceRow, PriceRow, RidgeRow, Runner, StudyOutput,
    StudyRow, TimingRow,
};
