//! Configuration, runners and CSV outputs.

mod config;
mod output;
mod run;

pub use config::{load_config, read_config, Backend, SweepParam, SweepSpec, TrainConfig, ECHO_FILE};
pub use output::{
    read_metrics, write_metrics, write_observations, write_rows, MetricsRow, ObservationRow, AGGREGATE_FILE,
    CHECKPOINT_FILE, EVAL_FILE, FAILURES_FILE, METRICS_FILE, METRICS_HEADER, OBSERVATIONS_FILE,
};
pub use run::{
    evaluate_in_memory, mean_std, run_eval, run_sweep, run_train, sweep_seed, train_in_memory, AggregateRow,
    FailureRow, RunSummary, SweepOutcome, TraceOptions, TrainOutcome, TrainedQ,
};
