//! Benchmarks with gold labels, per-property accuracy, multi-trial runs and
//! CSV/JSON reports.

mod accuracy;
mod benchmark;
mod report;
mod trials;

pub use accuracy::{compute_accuracy, pool_reports, AccuracyCounts, AccuracyReport, PropertyCounts, PropertyScore};
pub use benchmark::{
    bundled_files, load_benchmark, load_benchmark_from, Benchmark, BenchmarkManifest, BENCHMARK_NAMES,
};
pub use report::{read_report_json, render_report, write_report, ReportFormat, CSV_HEADER};
pub use trials::{describe_config, run_config_with, run_trials, DEFAULT_TRIALS};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("unknown benchmark {0:?} (expected one of pizza, upper)")]
    UnknownBenchmark(String),
    #[error("benchmark {name} is corrupt: {invariant}")]
    CorruptBenchmark { name: String, invariant: String },
    #[error("prediction labels class {0}, which has no gold labels")]
    ClassSetMismatch(String),
    #[error("every trial of {descriptor} failed; last error: {last_error}")]
    AllTrialsFailed { descriptor: String, last_error: String },
    #[error("number of trials must be at least 1")]
    InvalidTrials,
    #[error("no reports to write")]
    EmptyReport,
    #[error("I/O error on {path}: {message}")]
    Io { path: String, message: String },
}
