//! Benchmark harness: trial loop, failure classification, suites and
//! normalized metrics.

mod metrics;
mod suite;
mod trace;
mod trial;

use thiserror::Error;

pub use metrics::{aggregate, normalize, write_reports, EnvTable, FrameworkMetrics, MetricError, MetricSet, SeriesPoint};
pub use suite::{
    load_suite, read_records, replay_suite, run_suite, scenario_seed, SuiteConfig, SuiteOptions, RESULTS_FILE,
    SUITE_FILE,
};
pub use trace::{classify, read_transcript, FailureCause, Outcome, StepKind, TraceEvent};
pub use trial::{
    is_comparable, run_trial, run_trial_with, transcript_path, trial_id, BackendSpec, TrialConfig, TrialRecord,
    TrialServices, FALLBACK_MAX_ITERATIONS, OPTIMAL_STEP_FACTOR,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("cannot parse {0}")]
    Parse(String),
}
