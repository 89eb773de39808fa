//! Experiment configuration: defaults, config-file parsing, flag overrides,
//! and the resolved-config echo written into every run directory.
//!
//! Resolution is strictly layered: built-in defaults, then values from the
//! TOML config file, then command-line flags. The fully resolved
//! configuration is serialized back to TOML (`config.resolved.toml`) with
//! every key written out, so the echo is itself a complete, valid config
//! file — feeding it back through `--config` reproduces the run exactly.
//!
//! All quantities are SI (m, kg, s, N, rad); each key's unit is documented on
//! the corresponding parameter struct in the core crate.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use inhand_core::curriculum::{CurriculumId, SchedulerKind, LIFT_ERROR_SCALE};
use inhand_core::ppo::{PpoError, PpoHyperparams};
use inhand_core::sim::{HandParams, ObjectId, ObjectParams, SimConfig, SimError, TactileMode};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Fixed rollout length: control steps per episode (10 s at 10 ms).
pub const STEPS_PER_EPISODE: usize = 1000;

/// Number of action components: six joint targets plus the palm height.
pub const ACTION_DIM: usize = 7;

/// A configuration error, always naming the offending key.
#[derive(Debug, Error)]
pub enum ConfigError {
    /// The config file could not be read.
    #[error("could not read config file {path}: {source}")]
    Read {
        /// Offending path.
        path: PathBuf,
        /// Underlying I/O error.
        #[source]
        source: std::io::Error,
    },
    /// The config file is not valid TOML for the documented schema.
    #[error("could not parse config file {path}: {message}")]
    Parse {
        /// Offending path.
        path: PathBuf,
        /// Parser diagnostic (includes unknown key names and locations).
        message: String,
    },
    /// A resolved value violates an invariant.
    #[error("invalid value for `{key}`: {reason}")]
    Invalid {
        /// The key, qualified with its section (`sim.gravity`).
        key: String,
        /// Why the value was rejected.
        reason: String,
    },
}

fn invalid(key: &str, reason: impl ToString) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        reason: reason.to_string(),
    }
}

/// Maps a core parameter-validation error to a config error whose key is
/// qualified by the config-file section it lives in.
fn section_error(section: &str, err: SimError) -> ConfigError {
    match err {
        SimError::InvalidParameter { name, reason } => ConfigError::Invalid {
            key: format!("{section}.{name}"),
            reason,
        },
        other => ConfigError::Invalid {
            key: section.to_string(),
            reason: other.to_string(),
        },
    }
}

/// Command-line overrides shared by `run` and `print-config`.
///
/// Every flag is optional; absent flags fall through to the config file and
/// then to the built-in defaults.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct RunArgs {
    /// TOML config file applied between defaults and flags
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Reward curriculum, C1..C5
    #[arg(long)]
    pub curriculum: Option<String>,
    /// Tactile sensing: none or force3d
    #[arg(long)]
    pub tactile: Option<String>,
    /// Ball preset, O1..O4
    #[arg(long)]
    pub object: Option<String>,
    /// Number of independent seeded trials
    #[arg(long)]
    pub trials: Option<u32>,
    /// Training episodes per trial
    #[arg(long)]
    pub episodes: Option<u32>,
    /// Seed of trial 0; trial i uses base_seed + i
    #[arg(long)]
    pub base_seed: Option<u64>,
    /// Learning-rate schedule: constant, linear, or piecewise
    #[arg(long)]
    pub scheduler: Option<String>,
    /// Initial learning rate of phase 1
    #[arg(long)]
    pub phi: Option<f64>,
    /// Learning-rate parameter of the piecewise phase-2 ramp
    #[arg(long)]
    pub eta: Option<f64>,
    /// Concurrent trial executors
    #[arg(long)]
    pub workers: Option<u32>,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

/// `[hand]` section: overrides for [`HandParams`], all keys optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HandSection {
    pub palm_mass: Option<f64>,
    pub finger_mass: Option<f64>,
    pub link_length: Option<f64>,
    pub phalanx_radius: Option<f64>,
    pub palm_width: Option<f64>,
    pub palm_radius: Option<f64>,
    pub mount_lateral_offset: Option<f64>,
    pub initial_palm_height: Option<f64>,
    pub max_palm_translation: Option<f64>,
    pub joint_damping: Option<f64>,
    pub q1_range: Option<(f64, f64)>,
    pub q2_range: Option<(f64, f64)>,
    pub servo_kp: Option<f64>,
    pub servo_kd: Option<f64>,
    pub palm_kp: Option<f64>,
    pub palm_kd: Option<f64>,
    pub palm_force_limit: Option<f64>,
}

/// `[object]` section: ball preset choice plus per-field overrides of
/// [`ObjectParams`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObjectSection {
    /// Preset id O1..O4 the overrides below apply on top of.
    pub preset: Option<String>,
    pub mass: Option<f64>,
    pub radius: Option<f64>,
    pub desired_center_height: Option<f64>,
    pub stiffness_x: Option<f64>,
    pub damping_x: Option<f64>,
    pub damping_z: Option<f64>,
    pub damping_rot: Option<f64>,
}

/// `[sim]` section: overrides for [`SimConfig`] except the tactile mode,
/// which is the top-level `tactile` key.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub gravity: Option<f64>,
    pub control_dt: Option<f64>,
    pub substeps: Option<usize>,
    pub contact_stiffness: Option<f64>,
    pub contact_damping: Option<f64>,
    pub friction: Option<f64>,
    pub slip_velocity: Option<f64>,
}

/// `[ppo]` section: overrides for [`PpoHyperparams`]. The optimizer stepsize
/// is deliberately absent — the scheduler (top-level `scheduler`, `phi`,
/// `eta`) supplies it every update.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpoSection {
    pub hidden: Option<Vec<usize>>,
    pub epochs: Option<usize>,
    pub minibatch_size: Option<usize>,
    pub clip_epsilon: Option<f64>,
    pub gamma: Option<f64>,
    pub gae_lambda: Option<f64>,
    pub value_coef: Option<f64>,
    pub entropy_coef: Option<f64>,
    pub adam_beta1: Option<f64>,
    pub adam_beta2: Option<f64>,
    pub adam_epsilon: Option<f64>,
    pub obs_norm: Option<bool>,
}

/// The config-file schema. Every key is optional; unknown keys are rejected
/// with an error naming them.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub curriculum: Option<String>,
    pub tactile: Option<String>,
    pub trials: Option<u32>,
    pub episodes: Option<u32>,
    pub base_seed: Option<u64>,
    pub scheduler: Option<String>,
    pub phi: Option<f64>,
    pub eta: Option<f64>,
    /// Converts lift error to the reward's height unit (default per-cm).
    pub lift_error_scale: Option<f64>,
    pub workers: Option<u32>,
    pub out: Option<String>,
    pub hand: HandSection,
    pub object: ObjectSection,
    pub sim: SimSection,
    pub ppo: PpoSection,
}

/// A fully resolved, validated experiment description.
///
/// Everything a run produces is a deterministic function of this struct:
/// the RNG streams derive from `base_seed` plus the trial index, and no
/// other input state exists.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Reward curriculum.
    pub curriculum: CurriculumId,
    /// Ball preset the physical parameters started from.
    pub object: ObjectId,
    /// Number of independent seeded trials.
    pub trials: u32,
    /// Training episodes per trial.
    pub episodes: usize,
    /// Seed of trial 0.
    pub base_seed: u64,
    /// Learning-rate schedule shape.
    pub scheduler: SchedulerKind,
    /// Initial learning rate of phase 1.
    pub phi: f64,
    /// Phase-2 ramp parameter of the piecewise schedule.
    pub eta: f64,
    /// Reward's lift-error unit conversion.
    pub lift_error_scale: f64,
    /// Concurrent trial executors.
    pub workers: usize,
    /// Output directory.
    pub out: PathBuf,
    /// Hand geometry, masses, and servo gains.
    pub hand: HandParams,
    /// Ball physical parameters (preset plus overrides).
    pub object_params: ObjectParams,
    /// Integration, contact, and tactile settings.
    pub sim: SimConfig,
    /// PPO optimization hyperparameters.
    pub ppo: PpoHyperparams,
}

impl ExperimentConfig {
    /// Seed of trial `trial`: `base_seed + trial`, independent of curriculum
    /// and tactile condition so seed-matched comparisons line up.
    pub fn trial_seed(&self, trial: u32) -> u64 {
        self.base_seed.wrapping_add(u64::from(trial))
    }

    /// Tactile condition in effect.
    pub fn tactile(&self) -> TactileMode {
        self.sim.tactile_mode
    }

    /// The configuration as a complete [`FileConfig`] with every key set.
    pub fn to_file_config(&self) -> FileConfig {
        let h = &self.hand;
        let o = &self.object_params;
        let s = &self.sim;
        let p = &self.ppo;
        FileConfig {
            curriculum: Some(self.curriculum.name().to_string()),
            tactile: Some(s.tactile_mode.name().to_string()),
            trials: Some(self.trials),
            episodes: Some(self.episodes as u32),
            base_seed: Some(self.base_seed),
            scheduler: Some(self.scheduler.name().to_string()),
            phi: Some(self.phi),
            eta: Some(self.eta),
            lift_error_scale: Some(self.lift_error_scale),
            workers: Some(self.workers as u32),
            out: Some(self.out.display().to_string()),
            hand: HandSection {
                palm_mass: Some(h.palm_mass),
                finger_mass: Some(h.finger_mass),
                link_length: Some(h.link_length),
                phalanx_radius: Some(h.phalanx_radius),
                palm_width: Some(h.palm_width),
                palm_radius: Some(h.palm_radius),
                mount_lateral_offset: Some(h.mount_lateral_offset),
                initial_palm_height: Some(h.initial_palm_height),
                max_palm_translation: Some(h.max_palm_translation),
                joint_damping: Some(h.joint_damping),
                q1_range: Some(h.q1_range),
                q2_range: Some(h.q2_range),
                servo_kp: Some(h.servo_kp),
                servo_kd: Some(h.servo_kd),
                palm_kp: Some(h.palm_kp),
                palm_kd: Some(h.palm_kd),
                palm_force_limit: Some(h.palm_force_limit),
            },
            object: ObjectSection {
                preset: Some(self.object.name().to_string()),
                mass: Some(o.mass),
                radius: Some(o.radius),
                desired_center_height: Some(o.desired_center_height),
                stiffness_x: Some(o.stiffness_x),
                damping_x: Some(o.damping_x),
                damping_z: Some(o.damping_z),
                damping_rot: Some(o.damping_rot),
            },
            sim: SimSection {
                gravity: Some(s.gravity),
                control_dt: Some(s.control_dt),
                substeps: Some(s.substeps),
                contact_stiffness: Some(s.contact_stiffness),
                contact_damping: Some(s.contact_damping),
                friction: Some(s.friction),
                slip_velocity: Some(s.slip_velocity),
            },
            ppo: PpoSection {
                hidden: Some(p.hidden.clone()),
                epochs: Some(p.epochs),
                minibatch_size: Some(p.minibatch_size),
                clip_epsilon: Some(p.clip_epsilon),
                gamma: Some(p.gamma),
                gae_lambda: Some(p.gae_lambda),
                value_coef: Some(p.value_coef),
                entropy_coef: Some(p.entropy_coef),
                adam_beta1: Some(p.adam_beta1),
                adam_beta2: Some(p.adam_beta2),
                adam_epsilon: Some(p.adam_epsilon),
                obs_norm: Some(p.obs_norm),
            },
        }
    }

    /// The provenance echo: the full configuration as TOML text. Floats are
    /// written in shortest round-trip form, so parsing the echo reproduces
    /// this configuration bit for bit.
    pub fn resolved_toml(&self) -> String {
        // All field types in FileConfig serialize to TOML; this cannot fail.
        toml::to_string_pretty(&self.to_file_config()).expect("resolved config serializes to TOML")
    }
}

fn merge<T: Clone>(dst: &mut T, src: &Option<T>) {
    if let Some(v) = src {
        *dst = v.clone();
    }
}

fn apply_hand(params: &mut HandParams, s: &HandSection) {
    merge(&mut params.palm_mass, &s.palm_mass);
    merge(&mut params.finger_mass, &s.finger_mass);
    merge(&mut params.link_length, &s.link_length);
    merge(&mut params.phalanx_radius, &s.phalanx_radius);
    merge(&mut params.palm_width, &s.palm_width);
    merge(&mut params.palm_radius, &s.palm_radius);
    merge(&mut params.mount_lateral_offset, &s.mount_lateral_offset);
    merge(&mut params.initial_palm_height, &s.initial_palm_height);
    merge(&mut params.max_palm_translation, &s.max_palm_translation);
    merge(&mut params.joint_damping, &s.joint_damping);
    merge(&mut params.q1_range, &s.q1_range);
    merge(&mut params.q2_range, &s.q2_range);
    merge(&mut params.servo_kp, &s.servo_kp);
    merge(&mut params.servo_kd, &s.servo_kd);
    merge(&mut params.palm_kp, &s.palm_kp);
    merge(&mut params.palm_kd, &s.palm_kd);
    merge(&mut params.palm_force_limit, &s.palm_force_limit);
}

fn apply_object(params: &mut ObjectParams, s: &ObjectSection) {
    merge(&mut params.mass, &s.mass);
    merge(&mut params.radius, &s.radius);
    merge(&mut params.desired_center_height, &s.desired_center_height);
    merge(&mut params.stiffness_x, &s.stiffness_x);
    merge(&mut params.damping_x, &s.damping_x);
    merge(&mut params.damping_z, &s.damping_z);
    merge(&mut params.damping_rot, &s.damping_rot);
}

fn apply_sim(config: &mut SimConfig, s: &SimSection) {
    merge(&mut config.gravity, &s.gravity);
    merge(&mut config.control_dt, &s.control_dt);
    merge(&mut config.substeps, &s.substeps);
    merge(&mut config.contact_stiffness, &s.contact_stiffness);
    merge(&mut config.contact_damping, &s.contact_damping);
    merge(&mut config.friction, &s.friction);
    merge(&mut config.slip_velocity, &s.slip_velocity);
}

fn apply_ppo(params: &mut PpoHyperparams, s: &PpoSection) {
    merge(&mut params.hidden, &s.hidden);
    merge(&mut params.epochs, &s.epochs);
    merge(&mut params.minibatch_size, &s.minibatch_size);
    merge(&mut params.clip_epsilon, &s.clip_epsilon);
    merge(&mut params.gamma, &s.gamma);
    merge(&mut params.gae_lambda, &s.gae_lambda);
    merge(&mut params.value_coef, &s.value_coef);
    merge(&mut params.entropy_coef, &s.entropy_coef);
    merge(&mut params.adam_beta1, &s.adam_beta1);
    merge(&mut params.adam_beta2, &s.adam_beta2);
    merge(&mut params.adam_epsilon, &s.adam_epsilon);
    merge(&mut params.obs_norm, &s.obs_norm);
}

/// Reads and parses a config file.
pub fn load_file(path: &Path) -> Result<FileConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    toml::from_str(&text).map_err(|e| ConfigError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Loads `--config` (when given) and resolves it together with the flags.
pub fn resolve_args(args: &RunArgs) -> Result<ExperimentConfig, ConfigError> {
    let file = match &args.config {
        Some(path) => load_file(path)?,
        None => FileConfig::default(),
    };
    resolve(&file, args)
}

/// Resolves defaults, file values, and flags into a validated configuration.
///
/// Precedence per key: flag over file over default. Identifier strings are
/// parsed after precedence so a bad value is reported against its key
/// regardless of where it came from.
pub fn resolve(file: &FileConfig, args: &RunArgs) -> Result<ExperimentConfig, ConfigError> {
    let pick = |flag: &Option<String>, file_val: &Option<String>, default: &str| -> String {
        flag.clone()
            .or_else(|| file_val.clone())
            .unwrap_or_else(|| default.to_string())
    };

    let curriculum = CurriculumId::from_str(&pick(&args.curriculum, &file.curriculum, "C3"))
        .map_err(|e| invalid("curriculum", e))?;
    let tactile = TactileMode::from_str(&pick(&args.tactile, &file.tactile, "none"))
        .map_err(|e| invalid("tactile", e))?;
    let object = ObjectId::from_str(&pick(&args.object, &file.object.preset, "O1"))
        .map_err(|e| invalid("object.preset", e))?;
    let scheduler = SchedulerKind::from_str(&pick(&args.scheduler, &file.scheduler, "piecewise"))
        .map_err(|e| invalid("scheduler", e))?;

    let trials = args.trials.or(file.trials).unwrap_or(60);
    let episodes = args.episodes.or(file.episodes).unwrap_or(2000) as usize;
    let base_seed = args.base_seed.or(file.base_seed).unwrap_or(0);
    let phi = args.phi.or(file.phi).unwrap_or(1e-5);
    let eta = args.eta.or(file.eta).unwrap_or(1e-5);
    let lift_error_scale = file.lift_error_scale.unwrap_or(LIFT_ERROR_SCALE);
    let workers = args.workers.or(file.workers).unwrap_or(1) as usize;
    let out = args
        .out
        .clone()
        .or_else(|| file.out.clone().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));

    let mut hand = HandParams::default();
    apply_hand(&mut hand, &file.hand);
    let mut object_params = ObjectParams::preset(object);
    apply_object(&mut object_params, &file.object);
    let mut sim = SimConfig {
        tactile_mode: tactile,
        ..SimConfig::default()
    };
    apply_sim(&mut sim, &file.sim);
    let mut ppo = PpoHyperparams::default();
    apply_ppo(&mut ppo, &file.ppo);

    if trials == 0 {
        return Err(invalid("trials", "must be at least 1"));
    }
    if episodes == 0 {
        return Err(invalid("episodes", "must be at least 1"));
    }
    if workers == 0 {
        return Err(invalid("workers", "must be at least 1"));
    }
    for (key, v) in [("phi", phi), ("eta", eta), ("lift_error_scale", lift_error_scale)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(invalid(key, format!("must be positive and finite, got {v}")));
        }
    }
    hand.validate().map_err(|e| section_error("hand", e))?;
    object_params
        .validate()
        .map_err(|e| section_error("object", e))?;
    sim.validate().map_err(|e| section_error("sim", e))?;
    ppo.validate().map_err(|e| match e {
        PpoError::Contract(reason) => ConfigError::Invalid {
            key: "ppo".to_string(),
            reason,
        },
        other => ConfigError::Invalid {
            key: "ppo".to_string(),
            reason: other.to_string(),
        },
    })?;

    Ok(ExperimentConfig {
        curriculum,
        object,
        trials,
        episodes,
        base_seed,
        scheduler,
        phi,
        eta,
        lift_error_scale,
        workers,
        out,
        hand,
        object_params,
        sim,
        ppo,
    })
}
