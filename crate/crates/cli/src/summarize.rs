//! Rebuilds a run directory's merged rows, summary, and plot points from the
//! per-trial artifacts, without re-simulating anything.
//!
//! The inputs are exactly what a run leaves behind: `config.resolved.toml`
//! for the experiment identity and one `record.json` + `rows.csv` pair per
//! trial. Because the rebuild shares the run's own export path, summarizing
//! a finished run reproduces its outputs byte for byte.

use std::path::Path;

use crate::config::{load_file, resolve, RunArgs};
use crate::experiment::{write_outputs, HarnessError, RunOutcome};
use crate::trial::{trial_dir, TrialRecord};

/// Regenerates `rows.csv`, `summary.json`, and `plot_points.csv` in `dir`.
///
/// Every trial the configuration promises must have a readable, consistent
/// `record.json`; completed trials must additionally have complete row
/// files. Anything missing or corrupt fails the rebuild with an error
/// listing each affected trial.
pub fn summarize(dir: &Path) -> Result<RunOutcome, HarnessError> {
    let file = load_file(&dir.join("config.resolved.toml"))?;
    let mut cfg = resolve(&file, &RunArgs::default())?;
    // Outputs land where the artifacts actually are, even if the run was
    // produced under a different working directory.
    cfg.out = dir.to_path_buf();

    let mut records: Vec<TrialRecord> = Vec::with_capacity(cfg.trials as usize);
    let mut problems = Vec::new();
    for trial in 0..cfg.trials {
        let path = trial_dir(&cfg.out, trial).join("record.json");
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) => {
                problems.push(format!("trial {trial}: missing record ({e})"));
                continue;
            }
        };
        match serde_json::from_str::<TrialRecord>(&text) {
            Ok(record) => {
                if record.trial != trial {
                    problems.push(format!(
                        "trial {trial}: record labeled trial {}",
                        record.trial
                    ));
                } else if record.seed != cfg.trial_seed(trial) {
                    problems.push(format!(
                        "trial {trial}: seed {} does not match base_seed {} + {trial}",
                        record.seed, cfg.base_seed
                    ));
                } else {
                    records.push(record);
                }
            }
            Err(e) => problems.push(format!("trial {trial}: unreadable record ({e})")),
        }
    }
    if !problems.is_empty() {
        return Err(HarnessError::Corrupt(problems.join("; ")));
    }
    write_outputs(&cfg, &records)
}
