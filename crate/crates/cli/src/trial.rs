//! One seeded training trial: the episode loop tying simulation, reward,
//! learning-rate schedule, and PPO updates together, streaming one metric
//! row per episode to disk.
//!
//! A trial is fully determined by the experiment configuration and its trial
//! index. Three independent RNG streams derive from `base_seed + trial`:
//! policy initialization, action sampling, and minibatch shuffling — so a
//! refactor that consumes more draws from one stream cannot desynchronize
//! the others.
//!
//! Numeric failures (simulation divergence, non-finite losses) mark the
//! trial failed in its `record.json` and leave other trials untouched; only
//! I/O failures propagate as hard errors.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use inhand_core::curriculum::{step_reward, CurriculumSpec, LrSchedule, TaskTarget};
use inhand_core::metrics::{episode_metrics, row_line, EpisodeMeta, ROW_HEADER};
use inhand_core::ppo::{
    act, init_policy, save_checkpoint, update, PolicyParams, PpoError, RolloutBuffer, RunningNorm,
};
use inhand_core::rng::{stream_rng, STREAM_ACTION, STREAM_POLICY_INIT, STREAM_SHUFFLE};
use inhand_core::sim::{observe, reset, step, ActionCommand, SimState, TactileFrame};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ExperimentConfig, ACTION_DIM, STEPS_PER_EPISODE};

/// An I/O failure inside a trial. These abort the experiment; numeric
/// failures do not reach this type (they mark the trial failed instead).
#[derive(Debug, Error)]
#[error("trial {trial}: I/O failure at {path}: {source}")]
pub struct TrialError {
    /// Trial that hit the failure.
    pub trial: u32,
    /// File being written or created.
    pub path: PathBuf,
    /// Underlying error.
    #[source]
    pub source: std::io::Error,
}

/// Terminal state of a trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrialStatus {
    /// All episodes ran and the final checkpoint was written.
    Completed,
    /// A numeric failure ended the trial early; see the record's `error`.
    Failed,
}

/// Provenance record written as `record.json` in each trial directory.
///
/// `wall_clock_seconds` is the only output field anywhere that is not a
/// deterministic function of the configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    /// Record format version.
    pub schema_version: u32,
    /// Trial index within the experiment.
    pub trial: u32,
    /// RNG seed: `base_seed + trial`.
    pub seed: u64,
    /// Whether the trial ran to completion.
    pub status: TrialStatus,
    /// Diagnostics for a failed trial.
    pub error: Option<String>,
    /// Episodes that produced a metric row.
    pub episodes_completed: u32,
    /// Checkpoint file name relative to the trial directory, when written.
    pub checkpoint: Option<String>,
    /// Trial duration (informational; excluded from determinism guarantees).
    pub wall_clock_seconds: f64,
}

/// Directory holding one trial's rows, record, and checkpoint.
pub fn trial_dir(out: &Path, trial: u32) -> PathBuf {
    out.join("trials").join(format!("trial_{trial:03}"))
}

/// How a trial's training loop ended, before bookkeeping.
enum Outcome {
    Completed,
    Failed { message: String, episodes: u32 },
}

/// Runs trial `trial` of `cfg`: trains for `cfg.episodes` episodes, appends
/// one metric row per episode to `rows.csv` (flushed per episode, so a crash
/// loses at most the episode in flight), writes the final checkpoint, and
/// records the outcome in `record.json`.
pub fn run_trial(cfg: &ExperimentConfig, trial: u32) -> Result<TrialRecord, TrialError> {
    let started = Instant::now();
    let dir = trial_dir(&cfg.out, trial);
    let io_err = |path: &Path| {
        let (trial, path) = (trial, path.to_path_buf());
        move |source: std::io::Error| TrialError { trial, path, source }
    };
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;

    let rows_path = dir.join("rows.csv");
    let mut rows = BufWriter::new(File::create(&rows_path).map_err(io_err(&rows_path))?);
    writeln!(rows, "{ROW_HEADER}").map_err(io_err(&rows_path))?;

    let mut policy: Option<PolicyParams> = None;
    let outcome = train(cfg, trial, &mut rows, &rows_path, &mut policy)?;
    rows.flush().map_err(io_err(&rows_path))?;

    let record = match outcome {
        Outcome::Completed => {
            let checkpoint_path = dir.join("checkpoint.bin");
            let params = policy.as_ref().expect("completed trial has a policy");
            save_checkpoint(params, &checkpoint_path).map_err(|e| match e {
                PpoError::Io(source) => io_err(&checkpoint_path)(source),
                other => io_err(&checkpoint_path)(std::io::Error::other(other.to_string())),
            })?;
            TrialRecord {
                schema_version: 1,
                trial,
                seed: cfg.trial_seed(trial),
                status: TrialStatus::Completed,
                error: None,
                episodes_completed: cfg.episodes as u32,
                checkpoint: Some("checkpoint.bin".to_string()),
                wall_clock_seconds: started.elapsed().as_secs_f64(),
            }
        }
        Outcome::Failed { message, episodes } => TrialRecord {
            schema_version: 1,
            trial,
            seed: cfg.trial_seed(trial),
            status: TrialStatus::Failed,
            error: Some(message),
            episodes_completed: episodes,
            checkpoint: None,
            wall_clock_seconds: started.elapsed().as_secs_f64(),
        },
    };

    let record_path = dir.join("record.json");
    let json = serde_json::to_string_pretty(&record).expect("record serializes");
    fs::write(&record_path, json + "\n").map_err(io_err(&record_path))?;
    Ok(record)
}

/// The training loop proper. Returns how it ended; `Err` only for I/O.
///
/// On success the trained policy is left in `policy` for checkpointing.
fn train(
    cfg: &ExperimentConfig,
    trial: u32,
    rows: &mut BufWriter<File>,
    rows_path: &Path,
    policy: &mut Option<PolicyParams>,
) -> Result<Outcome, TrialError> {
    let seed = cfg.trial_seed(trial);
    let mut rng_init = stream_rng(seed, STREAM_POLICY_INIT);
    let mut rng_action = stream_rng(seed, STREAM_ACTION);
    let mut rng_shuffle = stream_rng(seed, STREAM_SHUFFLE);

    let mode = cfg.tactile();
    let obs_dim = mode.obs_dim();
    let fail = |message: String, episodes: u32| Ok(Outcome::Failed { message, episodes });

    let params = match init_policy(obs_dim, ACTION_DIM, &cfg.ppo.hidden, &mut rng_init) {
        Ok(p) => policy.insert(p),
        Err(e) => return fail(format!("policy initialization: {e}"), 0),
    };
    let curriculum = CurriculumSpec::new(cfg.curriculum, cfg.episodes);
    let schedule = LrSchedule::for_run(
        cfg.scheduler,
        cfg.phi,
        cfg.eta,
        cfg.episodes,
        STEPS_PER_EPISODE,
    );
    let target = TaskTarget::new(
        cfg.object_params.desired_center_height,
        cfg.object_params.radius,
    );
    let mut norm = cfg.ppo.obs_norm.then(|| RunningNorm::new(obs_dim));
    let mut buffer = RolloutBuffer::new();
    let mut states: Vec<SimState> = Vec::with_capacity(STEPS_PER_EPISODE);
    let mut rewards: Vec<f64> = Vec::with_capacity(STEPS_PER_EPISODE);

    for episode in 0..cfg.episodes {
        let done = episode as u32;
        let (coeffs, phase) = match curriculum.coefficients_at(episode) {
            Ok(v) => v,
            Err(e) => return fail(format!("episode {episode}: {e}"), done),
        };
        // Episode e's update rate is taken at the cumulative sample count
        // after its rollout, n = 1,000·(e+1). The last episode of phase 1
        // therefore trains at the ramp's zero endpoint, and the piecewise
        // schedule's restarted ramp applies from the first post-switch
        // update — the rate breakpoint coincides with the reward switch.
        let lr = match schedule.learning_rate((STEPS_PER_EPISODE * (episode + 1)) as u64) {
            Ok(v) => v,
            Err(e) => return fail(format!("episode {episode}: {e}"), done),
        };

        let mut state = match reset(&cfg.hand, &cfg.object_params, &cfg.sim) {
            Ok(s) => s,
            Err(e) => return fail(format!("episode {episode}: reset: {e}"), done),
        };
        let initial_theta = state.ball_theta;
        // Sensors read zero until the first step produces contact forces.
        let mut obs = observe(&state, &TactileFrame::zero(mode), mode);
        if let Some(n) = norm.as_mut() {
            n.update(&obs);
            obs = n.normalize(&obs);
        }

        states.clear();
        rewards.clear();
        for step_index in 0..STEPS_PER_EPISODE {
            let (action, log_prob, value) = match act(params, &obs, &mut rng_action) {
                Ok(v) => v,
                Err(e) => {
                    return fail(format!("episode {episode} step {step_index}: {e}"), done)
                }
            };
            let command = ActionCommand::new(
                action.as_slice().try_into().expect("action is 7 elements"),
            );
            let (next, tactile) = match step(&state, &command, &cfg.hand, &cfg.object_params, &cfg.sim)
            {
                Ok(v) => v,
                Err(e) => {
                    return fail(format!("episode {episode} step {step_index}: {e}"), done)
                }
            };
            // Reward is evaluated on the post-step state, like the sensors.
            let reward = step_reward(
                next.ball_thetad,
                next.lift(cfg.object_params.radius),
                &target,
                &coeffs,
                cfg.lift_error_scale,
            );
            let mut next_obs = observe(&next, &tactile, mode);
            if let Some(n) = norm.as_mut() {
                n.update(&next_obs);
                next_obs = n.normalize(&next_obs);
            }
            // Episodes end by truncation, never termination: done stays false
            // and the horizon is bridged by the critic's bootstrap below.
            buffer.push(obs, action, log_prob, reward, value, false);
            states.push(next.clone());
            rewards.push(reward);
            state = next;
            obs = next_obs;
        }
        buffer.set_bootstrap(params.critic.forward(&obs)[0]);

        let meta = EpisodeMeta {
            trial,
            episode: episode as u32,
            phase,
            lr,
        };
        let row = match episode_metrics(
            meta,
            &states,
            &rewards,
            &target,
            cfg.object_params.radius,
            initial_theta,
        ) {
            Ok(r) => r,
            Err(e) => return fail(format!("episode {episode}: metrics: {e}"), done),
        };
        writeln!(rows, "{}", row_line(&row)).map_err(|source| TrialError {
            trial,
            path: rows_path.to_path_buf(),
            source,
        })?;
        rows.flush().map_err(|source| TrialError {
            trial,
            path: rows_path.to_path_buf(),
            source,
        })?;

        if let Err(e) = update(params, &buffer, &cfg.ppo, lr, &mut rng_shuffle) {
            return fail(format!("episode {episode}: update: {e}"), done + 1);
        }
        buffer.clear();
    }
    Ok(Outcome::Completed)
}
