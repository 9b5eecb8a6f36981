//! CSV files written by the runners. Every file has a fixed header row.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learner::{EpisodeMetrics, MetricsLog};
use crate::quantum::FeatureVector;

pub const METRICS_FILE: &str = "metrics.csv";
pub const EVAL_FILE: &str = "eval.csv";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const OBSERVATIONS_FILE: &str = "initial_observations.csv";
pub const AGGREGATE_FILE: &str = "aggregate.csv";
pub const FAILURES_FILE: &str = "failures.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub episode: usize,
    pub steps: usize,
    pub sum_r_tran: f64,
    pub sum_r_tele: f64,
    pub sum_total: f64,
    pub collided: u8,
    pub ho_count: usize,
    pub epsilon: f64,
    pub wallclock_ms: Option<f64>,
}

impl From<&EpisodeMetrics> for MetricsRow {
    fn from(m: &EpisodeMetrics) -> Self {
        Self {
            episode: m.episode,
            steps: m.steps,
            sum_r_tran: m.sum_r_tran,
            sum_r_tele: m.sum_r_tele,
            sum_total: m.sum_total,
            collided: m.collided as u8,
            ho_count: m.ho_count,
            epsilon: m.epsilon,
            wallclock_ms: m.wallclock_ms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationRow {
    pub episode: usize,
    pub f0: f64,
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
    pub f4: f64,
}

impl ObservationRow {
    pub fn new(episode: usize, f: &FeatureVector) -> Self {
        let [f0, f1, f2, f3, f4] = *f.values();
        Self { episode, f0, f1, f2, f3, f4 }
    }
}

/// Writes `rows` with a header derived from `T`'s field names. An empty
/// slice still produces the header when `header` is given.
pub fn write_rows<T: Serialize>(path: &Path, rows: &[T], header: Option<&[&str]>) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new().has_headers(!rows.is_empty()).from_writer(file);
    if rows.is_empty() {
        if let Some(h) = header {
            w.write_record(h)?;
        }
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub const METRICS_HEADER: [&str; 9] = [
    "episode",
    "steps",
    "sum_r_tran",
    "sum_r_tele",
    "sum_total",
    "collided",
    "ho_count",
    "epsilon",
    "wallclock_ms",
];

pub fn write_metrics(path: &Path, log: &MetricsLog) -> Result<()> {
    let rows: Vec<MetricsRow> = log.episodes.iter().map(MetricsRow::from).collect();
    write_rows(path, &rows, Some(&METRICS_HEADER))
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub fn write_observations(path: &Path, log: &MetricsLog) -> Result<()> {
    let rows: Vec<ObservationRow> = log
        .initial_observations
        .iter()
        .enumerate()
        .map(|(i, f)| ObservationRow::new(i, f))
        .collect();
    write_rows(path, &rows, Some(&["episode", "f0", "f1", "f2", "f3", "f4"]))
}
