//! Benchmark harness for the `parsmc` particle filtering pipeline.
//!
//! Runs particle learning on simulated trend-plus-noise data for a grid of
//! algorithms and particle counts, aggregates repeated trials with a trimmed
//! mean, and writes per-phase timings as CSV or JSON. The [`report`] module
//! turns those records into speedup ratios and log-log scaling slopes.

pub mod bench;
pub mod config;
pub mod error;
pub mod report;

pub use bench::{
    aggregate, run_benchmark, run_benchmark_with, run_single, simulate_data, trimmed_mean,
    BenchRecord, RecordKind, RunOptions, SingleRun,
};
pub use config::{Algorithm, BenchConfig};
pub use error::{BenchError, Result};
pub use report::{
    aggregates, ratio_table, read_csv, read_csv_from, render_ratios, render_scaling,
    scaling_report, write_csv, write_csv_to, Field, RatioRow, ScalingReport, Slope,
};
