//! Experiment orchestration: a bounded worker pool over independent trials,
//! followed by row merging, cross-trial aggregation, and summary export.
//!
//! Workers only change scheduling, never numerics: each trial is a sealed
//! deterministic unit keyed by `base_seed + trial`, and the merge step sorts
//! by trial index, so the output bytes are identical for any worker count.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicU32, Ordering};
use std::sync::Mutex;

use inhand_core::metrics::{
    aggregate, export_plot_points, export_rows, plot_points, read_rows, EpisodeMetrics,
    MetricsError,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ConfigError, ExperimentConfig};
use crate::trial::{run_trial, trial_dir, TrialError, TrialRecord, TrialStatus};

/// A failure while orchestrating a run or rebuilding its outputs.
#[derive(Debug, Error)]
pub enum HarnessError {
    /// I/O failure inside a trial.
    #[error(transparent)]
    Trial(#[from] TrialError),
    /// I/O failure outside the trials.
    #[error("I/O failure at {path}: {source}")]
    Io {
        /// File or directory involved.
        path: PathBuf,
        /// Underlying error.
        #[source]
        source: std::io::Error,
    },
    /// Metric rows could not be read, written, or aggregated.
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    /// The run directory's configuration echo is unusable.
    #[error(transparent)]
    Config(#[from] ConfigError),
    /// Trial artifacts are missing or inconsistent, by trial.
    #[error("corrupt run directory: {0}")]
    Corrupt(String),
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Completion bookkeeping for a finished run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutcome {
    /// Trials configured.
    pub trials: u32,
    /// Trials that ran to completion, ascending.
    pub completed: Vec<u32>,
    /// Trials that failed numerically, ascending.
    pub failed: Vec<u32>,
}

impl RunOutcome {
    /// True when every configured trial completed.
    pub fn all_completed(&self) -> bool {
        self.failed.is_empty() && self.completed.len() == self.trials as usize
    }
}

/// Top-level structure of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    /// Summary format version.
    pub schema_version: u32,
    /// Curriculum id (C1..C5).
    pub curriculum: String,
    /// Tactile condition (none / force3d).
    pub tactile: String,
    /// Ball preset id (O1..O4).
    pub object: String,
    /// Learning-rate schedule kind.
    pub scheduler: String,
    /// Phase-1 initial learning rate.
    pub phi: f64,
    /// Piecewise phase-2 ramp parameter.
    pub eta: f64,
    /// Trials configured.
    pub trials: u32,
    /// Episodes per trial.
    pub episodes: u32,
    /// Seed of trial 0.
    pub base_seed: u64,
    /// Trials whose rows feed the statistics below.
    pub completed_trials: Vec<u32>,
    /// Trials excluded after numeric failure.
    pub failed_trials: Vec<u32>,
    /// Per-episode statistics across completed trials.
    pub episodes_summary: Vec<inhand_core::metrics::EpisodeAggregate>,
}

/// Runs every trial of `cfg` on at most `cfg.workers` threads, then writes
/// the merged rows, `summary.json`, and `plot_points.csv` into `cfg.out`.
///
/// The resolved configuration is echoed to `config.resolved.toml` before any
/// trial starts, so even an interrupted run records its provenance.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutcome, HarnessError> {
    std::fs::create_dir_all(&cfg.out).map_err(io_error(&cfg.out))?;
    let echo_path = cfg.out.join("config.resolved.toml");
    std::fs::write(&echo_path, cfg.resolved_toml()).map_err(io_error(&echo_path))?;

    let records = run_all_trials(cfg)?;
    write_outputs(cfg, &records)
}

/// Executes trials over the worker pool and returns their records sorted by
/// trial index. The first I/O failure stops the pool (running trials finish
/// their current work; unclaimed trials stay unrun) and is returned.
fn run_all_trials(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>, HarnessError> {
    let next = AtomicU32::new(0);
    let stop = AtomicBool::new(false);
    let records: Mutex<Vec<TrialRecord>> = Mutex::new(Vec::with_capacity(cfg.trials as usize));
    let first_error: Mutex<Option<TrialError>> = Mutex::new(None);
    let worker_count = cfg.workers.min(cfg.trials as usize).max(1);

    std::thread::scope(|scope| {
        for _ in 0..worker_count {
            scope.spawn(|| loop {
                if stop.load(Ordering::Relaxed) {
                    break;
                }
                let trial = next.fetch_add(1, Ordering::Relaxed);
                if trial >= cfg.trials {
                    break;
                }
                match run_trial(cfg, trial) {
                    Ok(record) => {
                        let status = match record.status {
                            TrialStatus::Completed => "completed",
                            TrialStatus::Failed => "failed",
                        };
                        eprintln!("trial {trial}: {status}");
                        records.lock().expect("records lock").push(record);
                    }
                    Err(e) => {
                        eprintln!("trial {trial}: aborted: {e}");
                        let mut slot = first_error.lock().expect("error lock");
                        slot.get_or_insert(e);
                        stop.store(true, Ordering::Relaxed);
                        break;
                    }
                }
            });
        }
    });

    if let Some(e) = first_error.into_inner().expect("error lock") {
        return Err(e.into());
    }
    let mut records = records.into_inner().expect("records lock");
    records.sort_by_key(|r| r.trial);
    Ok(records)
}

/// Reads back the rows of every completed trial, in trial order, verifying
/// that each file is parseable, carries the right trial id, and holds one
/// row per episode. Problems are reported together, listing every affected
/// trial.
pub(crate) fn collect_rows(
    cfg: &ExperimentConfig,
    completed: &[u32],
) -> Result<Vec<EpisodeMetrics>, HarnessError> {
    let mut all_rows = Vec::with_capacity(completed.len() * cfg.episodes);
    let mut problems = Vec::new();
    for &trial in completed {
        let path = trial_dir(&cfg.out, trial).join("rows.csv");
        match read_rows(&path) {
            Ok(rows) => {
                if rows.len() != cfg.episodes {
                    problems.push(format!(
                        "trial {trial}: {} rows, expected {}",
                        rows.len(),
                        cfg.episodes
                    ));
                } else if let Some(bad) = rows.iter().find(|r| r.trial != trial) {
                    problems.push(format!(
                        "trial {trial}: row labeled trial {}",
                        bad.trial
                    ));
                } else {
                    all_rows.extend(rows);
                }
            }
            Err(e) => problems.push(format!("trial {trial}: {e}")),
        }
    }
    if problems.is_empty() {
        Ok(all_rows)
    } else {
        Err(HarnessError::Corrupt(problems.join("; ")))
    }
}

/// Builds the merged `rows.csv`, `summary.json`, and `plot_points.csv` from
/// per-trial artifacts. Shared verbatim by `run` and `summarize`, which is
/// what makes re-summarizing byte-identical.
pub(crate) fn write_outputs(
    cfg: &ExperimentConfig,
    records: &[TrialRecord],
) -> Result<RunOutcome, HarnessError> {
    let completed: Vec<u32> = records
        .iter()
        .filter(|r| r.status == TrialStatus::Completed)
        .map(|r| r.trial)
        .collect();
    let failed: Vec<u32> = records
        .iter()
        .filter(|r| r.status == TrialStatus::Failed)
        .map(|r| r.trial)
        .collect();

    let all_rows = collect_rows(cfg, &completed)?;
    export_rows(&all_rows, &cfg.out.join("rows.csv"))?;

    let aggregates = if all_rows.is_empty() {
        Vec::new()
    } else {
        aggregate(&all_rows)?
    };
    export_plot_points(&plot_points(&aggregates), &cfg.out.join("plot_points.csv"))?;

    let summary = Summary {
        schema_version: 1,
        curriculum: cfg.curriculum.name().to_string(),
        tactile: cfg.tactile().name().to_string(),
        object: cfg.object.name().to_string(),
        scheduler: cfg.scheduler.name().to_string(),
        phi: cfg.phi,
        eta: cfg.eta,
        trials: cfg.trials,
        episodes: cfg.episodes as u32,
        base_seed: cfg.base_seed,
        completed_trials: completed.clone(),
        failed_trials: failed.clone(),
        episodes_summary: aggregates,
    };
    let summary_path = cfg.out.join("summary.json");
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    std::fs::write(&summary_path, json + "\n").map_err(io_error(&summary_path))?;

    Ok(RunOutcome {
        trials: cfg.trials,
        completed,
        failed,
    })
}
