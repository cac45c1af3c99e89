//! Synthetic benchmarks with known ground truth: scene generation, paired
//! policy comparison, parameter sweeps and their reports.

mod config;
mod run;
mod scene;
mod sweep;

pub use config::BenchConfig;
pub use run::{
    generate_pairs, prepare_pairs, run_benchmark, run_prepared, stratified_benchmark, BenchPair,
    BenchmarkReport, CachedPair, ErrorSummary, PairEntry, PairSetConfig, Policy, RuntimeStats,
    StratifiedReport, StratumReport, TopMEntry, REPORT_SCHEMA, TOP_M,
};
pub use scene::{generate_scene_pair, SyntheticSceneConfig};
pub use sweep::{sweep_parameters, sweep_table, SweepAxis, SweepRow};
