//! Episode metrics, cross-trial aggregation, and file formats.
//!
//! One row per (trial, episode) captures what the result figures plot:
//! cumulative reward, mean ball lift, time-in-band percentage, and completed
//! rotations. Aggregation reduces rows per episode across trials to
//! mean/std/median/quartiles. Exports are plain UTF-8 comma-separated text
//! with fixed headers; identical data always serializes to identical bytes,
//! so re-running a summary over the same raw rows is a no-op diff.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::curriculum::{completed_rotations, in_target_band, TaskTarget};
use crate::sim::{SimState, PER_MM};

/// Header of a metric-row file. Field order is the serialization contract.
pub const ROW_HEADER: &str =
    "trial,episode,phase,lr,cum_reward,mean_lift_mm,lift_success_pct,completed_rotations";

/// Header of a plot-point file.
pub const PLOT_HEADER: &str = "episode,lift_success_pct,completed_rotations";

/// Errors from metric computation or row I/O.
#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    /// An input violated a documented precondition.
    #[error("contract violation: {0}")]
    Contract(String),
    /// File I/O failed.
    #[error("{path}: {source}")]
    Io {
        /// File being read or written.
        path: PathBuf,
        /// Underlying error.
        source: std::io::Error,
    },
    /// A row file was malformed.
    #[error("line {line}: {reason}")]
    Parse {
        /// 1-based line number.
        line: usize,
        /// What went wrong.
        reason: String,
    },
}

/// Identity and context of one episode, supplied by the training loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeMeta {
    /// Trial index within the experiment.
    pub trial: u32,
    /// Episode index within the trial (0-based).
    pub episode: u32,
    /// Reward phase in effect (1 or 2).
    pub phase: u8,
    /// Learning rate used for this episode's update.
    pub lr: f64,
}

/// One metric row: the per-episode summary of a 1,000-step rollout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    /// Trial index.
    pub trial: u32,
    /// Episode index (0-based).
    pub episode: u32,
    /// Reward phase in effect.
    pub phase: u8,
    /// Learning rate used for this episode's update.
    pub lr: f64,
    /// Sum of per-step rewards, accumulated in step order.
    pub cum_reward: f64,
    /// Mean ball lift over the episode, millimeters.
    pub mean_lift_mm: f64,
    /// Percentage of steps with the lift inside the target band.
    pub lift_success_pct: f64,
    /// Net positive ball rotation in turns (negative net clamps to zero).
    pub completed_rotations: f64,
}

/// Reduces one episode's trajectory to its metric row.
///
/// `states` holds the post-step states in step order; `rewards` the matching
/// per-step rewards. Net rotation is measured from `initial_theta` (the
/// reset state) to the final state's unwrapped angle.
pub fn episode_metrics(
    meta: EpisodeMeta,
    states: &[SimState],
    rewards: &[f64],
    target: &TaskTarget,
    ball_radius: f64,
    initial_theta: f64,
) -> Result<EpisodeMetrics, MetricsError> {
    if states.is_empty() {
        return Err(MetricsError::Contract("empty trajectory".into()));
    }
    if states.len() != rewards.len() {
        return Err(MetricsError::Contract(format!(
            "{} states but {} rewards",
            states.len(),
            rewards.len()
        )));
    }
    let n = states.len() as f64;
    let mut cum_reward = 0.0;
    for r in rewards {
        if !r.is_finite() {
            return Err(MetricsError::Contract(format!("non-finite reward {r}")));
        }
        cum_reward += r;
    }
    let mut lift_sum = 0.0;
    let mut in_band = 0usize;
    for s in states {
        let lift = s.lift(ball_radius);
        lift_sum += lift;
        if in_target_band(lift, target) {
            in_band += 1;
        }
    }
    let net_rotation = states.last().expect("non-empty").ball_theta - initial_theta;
    Ok(EpisodeMetrics {
        trial: meta.trial,
        episode: meta.episode,
        phase: meta.phase,
        lr: meta.lr,
        cum_reward,
        mean_lift_mm: lift_sum / n * PER_MM,
        lift_success_pct: 100.0 * in_band as f64 / n,
        completed_rotations: completed_rotations(net_rotation),
    })
}

/// Summary statistics of one metric across trials: mean, population
/// standard deviation, and type-7 (linear-interpolation) quartiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricStats {
    /// Arithmetic mean.
    pub mean: f64,
    /// Population standard deviation (divide by n).
    pub std: f64,
    /// 50th percentile (midpoint of the two central values for even n).
    pub median: f64,
    /// 25th percentile.
    pub q25: f64,
    /// 75th percentile.
    pub q75: f64,
}

/// Cross-trial statistics for one episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeAggregate {
    /// Episode index.
    pub episode: u32,
    /// Reward phase (identical across trials by construction).
    pub phase: u8,
    /// Number of trials contributing.
    pub trials: usize,
    /// Cumulative-reward statistics.
    pub cum_reward: MetricStats,
    /// Mean-lift statistics (mm).
    pub mean_lift_mm: MetricStats,
    /// Lift-success statistics (%).
    pub lift_success_pct: MetricStats,
    /// Completed-rotation statistics (turns).
    pub completed_rotations: MetricStats,
}

/// Linear-interpolation quantile of pre-sorted values (the common "type 7"
/// rule: index h = (n−1)·p, interpolate between the two bracketing order
/// statistics).
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

/// Statistics of one sample of values.
fn stats_of(values: &[f64]) -> MetricStats {
    debug_assert!(!values.is_empty());
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("metrics are finite"));
    MetricStats {
        mean,
        std: var.sqrt(),
        median: quantile_sorted(&sorted, 0.5),
        q25: quantile_sorted(&sorted, 0.25),
        q75: quantile_sorted(&sorted, 0.75),
    }
}

/// Aggregates metric rows per episode across trials.
///
/// Rows are grouped by episode and ordered by trial id within each group
/// before any arithmetic, so the result is independent of input order
/// (bit-for-bit). Duplicate (trial, episode) pairs and inconsistent phase
/// tags are rejected.
pub fn aggregate(rows: &[EpisodeMetrics]) -> Result<Vec<EpisodeAggregate>, MetricsError> {
    if rows.is_empty() {
        return Err(MetricsError::Contract("no rows to aggregate".into()));
    }
    let mut by_episode: std::collections::BTreeMap<u32, Vec<&EpisodeMetrics>> =
        std::collections::BTreeMap::new();
    for row in rows {
        by_episode.entry(row.episode).or_default().push(row);
    }
    let mut out = Vec::with_capacity(by_episode.len());
    for (episode, mut group) in by_episode {
        group.sort_by_key(|r| r.trial);
        for pair in group.windows(2) {
            if pair[0].trial == pair[1].trial {
                return Err(MetricsError::Contract(format!(
                    "duplicate row for trial {} episode {episode}",
                    pair[0].trial
                )));
            }
        }
        let phase = group[0].phase;
        if group.iter().any(|r| r.phase != phase) {
            return Err(MetricsError::Contract(format!(
                "inconsistent phase tags at episode {episode}"
            )));
        }
        let collect = |f: fn(&EpisodeMetrics) -> f64| -> Vec<f64> {
            group.iter().map(|r| f(r)).collect()
        };
        out.push(EpisodeAggregate {
            episode,
            phase,
            trials: group.len(),
            cum_reward: stats_of(&collect(|r| r.cum_reward)),
            mean_lift_mm: stats_of(&collect(|r| r.mean_lift_mm)),
            lift_success_pct: stats_of(&collect(|r| r.lift_success_pct)),
            completed_rotations: stats_of(&collect(|r| r.completed_rotations)),
        });
    }
    Ok(out)
}

/// One point of the success-vs-rotation trajectory: the cross-trial means
/// for one episode. The phase tag is carried for annotation but not written
/// to the 3-column point file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlotPoint {
    /// Episode index.
    pub episode: u32,
    /// Reward phase.
    pub phase: u8,
    /// Mean lift success (%).
    pub lift_success_pct: f64,
    /// Mean completed rotations (turns).
    pub completed_rotations: f64,
}

/// Extracts the per-episode plot points (episode order) from aggregates.
pub fn plot_points(aggregates: &[EpisodeAggregate]) -> Vec<PlotPoint> {
    aggregates
        .iter()
        .map(|a| PlotPoint {
            episode: a.episode,
            phase: a.phase,
            lift_success_pct: a.lift_success_pct.mean,
            completed_rotations: a.completed_rotations.mean,
        })
        .collect()
}

/// Serializes rows to the comma-separated text format (header included).
pub fn rows_to_csv(rows: &[EpisodeMetrics]) -> String {
    let mut out = String::from(ROW_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&row_line(r));
        out.push('\n');
    }
    out
}

/// One serialized row, without trailing newline. Floats print in Rust's
/// shortest round-trip decimal form, which is platform-independent.
pub fn row_line(r: &EpisodeMetrics) -> String {
    format!(
        "{},{},{},{},{},{},{},{}",
        r.trial,
        r.episode,
        r.phase,
        r.lr,
        r.cum_reward,
        r.mean_lift_mm,
        r.lift_success_pct,
        r.completed_rotations
    )
}

/// Parses row-file text back into rows, validating the header and every
/// field.
pub fn parse_rows(text: &str) -> Result<Vec<EpisodeMetrics>, MetricsError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == ROW_HEADER => {}
        Some((_, header)) => {
            return Err(MetricsError::Parse {
                line: 1,
                reason: format!("bad header {header:?}"),
            })
        }
        None => {
            return Err(MetricsError::Parse {
                line: 1,
                reason: "empty file".into(),
            })
        }
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(MetricsError::Parse {
                line: lineno,
                reason: format!("expected 8 fields, got {}", fields.len()),
            });
        }
        let field = |i: usize, what: &str| -> Result<f64, MetricsError> {
            fields[i].parse::<f64>().map_err(|e| MetricsError::Parse {
                line: lineno,
                reason: format!("{what}: {e}"),
            })
        };
        let int_field = |i: usize, what: &str| -> Result<u32, MetricsError> {
            fields[i].parse::<u32>().map_err(|e| MetricsError::Parse {
                line: lineno,
                reason: format!("{what}: {e}"),
            })
        };
        rows.push(EpisodeMetrics {
            trial: int_field(0, "trial")?,
            episode: int_field(1, "episode")?,
            phase: fields[2].parse::<u8>().map_err(|e| MetricsError::Parse {
                line: lineno,
                reason: format!("phase: {e}"),
            })?,
            lr: field(3, "lr")?,
            cum_reward: field(4, "cum_reward")?,
            mean_lift_mm: field(5, "mean_lift_mm")?,
            lift_success_pct: field(6, "lift_success_pct")?,
            completed_rotations: field(7, "completed_rotations")?,
        });
    }
    Ok(rows)
}

/// Writes rows to `path` (header + one line per row).
pub fn export_rows(rows: &[EpisodeMetrics], path: &Path) -> Result<(), MetricsError> {
    std::fs::write(path, rows_to_csv(rows)).map_err(|source| MetricsError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads a row file written by [`export_rows`] (or appended row by row).
pub fn read_rows(path: &Path) -> Result<Vec<EpisodeMetrics>, MetricsError> {
    let text = std::fs::read_to_string(path).map_err(|source| MetricsError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_rows(&text)
}

/// Serializes plot points to the 3-column point-file format.
pub fn plot_points_to_csv(points: &[PlotPoint]) -> String {
    let mut out = String::from(PLOT_HEADER);
    out.push('\n');
    for p in points {
        out.push_str(&format!(
            "{},{},{}\n",
            p.episode, p.lift_success_pct, p.completed_rotations
        ));
    }
    out
}

/// Writes plot points to `path`.
pub fn export_plot_points(points: &[PlotPoint], path: &Path) -> Result<(), MetricsError> {
    std::fs::write(path, plot_points_to_csv(points)).map_err(|source| MetricsError::Io {
        path: path.to_path_buf(),
        source,
    })
}
