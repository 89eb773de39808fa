//! From-scratch proximal policy optimization.
//!
//! Everything the agent side needs, with no autodiff or tensor dependencies:
//!
//! * [`net`] — plain-`f64` MLPs with manual backpropagation and orthogonal
//!   initialization;
//! * [`policy`] — the Gaussian actor-critic (state-independent learned
//!   `log_std`) and action sampling;
//! * [`gae`] — rollout storage and generalized advantage estimation;
//! * [`loss`] — the clipped surrogate + value + entropy objective and its
//!   exact gradients;
//! * [`adam`] — the bias-corrected Adam optimizer over flat parameters;
//! * [`update`] — the shuffled minibatch-epoch update loop;
//! * [`checkpoint`] — the versioned binary save/load format.
//!
//! All arithmetic is 64-bit: the gradient-check tolerances in the test
//! suite (and the determinism guarantees of the experiment harness) matter
//! more than speed at these network sizes.

pub mod adam;
pub mod checkpoint;
pub mod gae;
pub mod loss;
pub mod net;
pub mod policy;
pub mod update;

pub use adam::{adam_step, AdamState};
pub use checkpoint::{
    deserialize_checkpoint, load_checkpoint, save_checkpoint, serialize_checkpoint,
};
pub use gae::{compute_gae, normalize_advantages, returns_from_advantages, RolloutBuffer};
pub use loss::{ppo_loss, LossTerms};
pub use net::{Mlp, MlpCache, MlpGrads};
pub use policy::{
    act, gaussian_entropy, gaussian_log_prob, init_policy, PolicyGrads, PolicyParams, RunningNorm,
};
pub use update::{update, UpdateStats};

use serde::{Deserialize, Serialize};

/// Errors from the PPO stack.
#[derive(Debug, thiserror::Error)]
pub enum PpoError {
    /// An input violated a documented precondition.
    #[error("contract violation: {0}")]
    Contract(String),
    /// A computation produced NaN or infinity.
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    /// Checkpoint I/O failed.
    #[error("checkpoint i/o: {0}")]
    Io(#[from] std::io::Error),
    /// A checkpoint file was malformed.
    #[error("bad checkpoint: {0}")]
    BadCheckpoint(String),
}

/// PPO hyperparameters.
///
/// Defaults follow the reference training setup: two 64-unit tanh hidden
/// layers, 8 epochs of shuffled 64-sample minibatches per update, γ = 0.99,
/// λ = 0.85, ε = 0.2, c1 = 0.5, c2 = 0.02. The Adam *learning rate* is
/// deliberately absent — the scheduler owns it and passes it to
/// [`update`] explicitly each episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpoHyperparams {
    /// Hidden layer widths shared by actor and critic.
    pub hidden: Vec<usize>,
    /// Optimization epochs per update.
    pub epochs: usize,
    /// Minibatch size (a short final chunk is kept).
    pub minibatch_size: usize,
    /// Surrogate clip range ε.
    pub clip_epsilon: f64,
    /// Discount factor γ.
    pub gamma: f64,
    /// GAE smoothing λ.
    pub gae_lambda: f64,
    /// Value-loss coefficient c1.
    pub value_coef: f64,
    /// Entropy-bonus coefficient c2.
    pub entropy_coef: f64,
    /// Adam first-moment decay β₁.
    pub adam_beta1: f64,
    /// Adam second-moment decay β₂.
    pub adam_beta2: f64,
    /// Adam denominator fuzz ε.
    pub adam_epsilon: f64,
    /// Enable running observation normalization (off by default).
    pub obs_norm: bool,
}

impl Default for PpoHyperparams {
    fn default() -> Self {
        PpoHyperparams {
            hidden: vec![64, 64],
            epochs: 8,
            minibatch_size: 64,
            clip_epsilon: 0.2,
            gamma: 0.99,
            gae_lambda: 0.85,
            value_coef: 0.5,
            entropy_coef: 0.02,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            obs_norm: false,
        }
    }
}

impl PpoHyperparams {
    /// Checks every documented invariant, returning the first violation.
    pub fn validate(&self) -> Result<(), PpoError> {
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(PpoError::Contract(format!(
                "hidden layout must be non-empty with positive widths, got {:?}",
                self.hidden
            )));
        }
        if self.epochs == 0 {
            return Err(PpoError::Contract("epochs must be at least 1".into()));
        }
        if self.minibatch_size == 0 {
            return Err(PpoError::Contract("minibatch_size must be at least 1".into()));
        }
        if !(self.clip_epsilon > 0.0 && self.clip_epsilon < 1.0) {
            return Err(PpoError::Contract(format!(
                "clip_epsilon must lie in (0, 1), got {}",
                self.clip_epsilon
            )));
        }
        for (name, v, lo, hi) in [
            ("gamma", self.gamma, 0.0, 1.0),
            ("gae_lambda", self.gae_lambda, 0.0, 1.0),
            ("adam_beta1", self.adam_beta1, 0.0, 1.0 - 1e-12),
            ("adam_beta2", self.adam_beta2, 0.0, 1.0 - 1e-12),
        ] {
            if !(v >= lo && v <= hi) {
                return Err(PpoError::Contract(format!(
                    "{name} must lie in [{lo}, {hi}], got {v}"
                )));
            }
        }
        for (name, v) in [
            ("value_coef", self.value_coef),
            ("entropy_coef", self.entropy_coef),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(PpoError::Contract(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        if !(self.adam_epsilon > 0.0) {
            return Err(PpoError::Contract(format!(
                "adam_epsilon must be positive, got {}",
                self.adam_epsilon
            )));
        }
        Ok(())
    }
}
