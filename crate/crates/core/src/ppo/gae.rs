//! Rollout storage and generalized advantage estimation.
//!
//! The buffer records one on-policy rollout (observations, raw actions,
//! log-probabilities, rewards, critic values, done flags) plus a bootstrap
//! value for the state after the final transition. Advantages follow the
//! GAE(γ, λ) backward recursion
//!
//! ```text
//! δ_t = r_t + γ·V(s_{t+1})·(1 − done_t) − V(s_t)
//! Â_t = δ_t + γ·λ·(1 − done_t)·Â_{t+1}
//! ```
//!
//! with `V(s_T)` taken from the bootstrap slot. Returns are `Â_t + V(s_t)`.
//! Episodes that end by running out the clock are truncations, not terminal
//! states: their `done` flag stays `false` and the critic's estimate of the
//! final observation supplies the bootstrap.

use super::PpoError;

/// On-policy rollout data for a single update.
#[derive(Debug, Clone, Default)]
pub struct RolloutBuffer {
    /// Observations, one per step (normalized if normalization is on).
    pub observations: Vec<Vec<f64>>,
    /// Raw Gaussian action samples, one per step.
    pub actions: Vec<Vec<f64>>,
    /// Log-probabilities of those actions under the behavior policy.
    pub log_probs: Vec<f64>,
    /// Per-step rewards.
    pub rewards: Vec<f64>,
    /// Critic values for the stored observations.
    pub values: Vec<f64>,
    /// Terminal flags. `false` on truncation (the usual case here).
    pub dones: Vec<bool>,
    /// Critic value of the observation after the last stored step.
    pub bootstrap_value: f64,
}

impl RolloutBuffer {
    /// An empty buffer.
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends one transition.
    pub fn push(
        &mut self,
        observation: Vec<f64>,
        action: Vec<f64>,
        log_prob: f64,
        reward: f64,
        value: f64,
        done: bool,
    ) {
        self.observations.push(observation);
        self.actions.push(action);
        self.log_probs.push(log_prob);
        self.rewards.push(reward);
        self.values.push(value);
        self.dones.push(done);
    }

    /// Sets the bootstrap value used at the horizon.
    pub fn set_bootstrap(&mut self, value: f64) {
        self.bootstrap_value = value;
    }

    /// Number of stored transitions.
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    /// True when no transitions are stored.
    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    /// Discards all stored transitions (bootstrap included).
    pub fn clear(&mut self) {
        self.observations.clear();
        self.actions.clear();
        self.log_probs.clear();
        self.rewards.clear();
        self.values.clear();
        self.dones.clear();
        self.bootstrap_value = 0.0;
    }
}

/// Computes GAE advantages for the buffer. The returned vector has one entry
/// per stored transition.
pub fn compute_gae(
    buffer: &RolloutBuffer,
    gamma: f64,
    lambda: f64,
) -> Result<Vec<f64>, PpoError> {
    let t_max = buffer.len();
    if t_max == 0 {
        return Err(PpoError::Contract("empty rollout buffer".into()));
    }
    let mut advantages = vec![0.0; t_max];
    let mut next_adv = 0.0;
    for t in (0..t_max).rev() {
        let not_done = if buffer.dones[t] { 0.0 } else { 1.0 };
        let next_value = if t + 1 < t_max {
            buffer.values[t + 1]
        } else {
            buffer.bootstrap_value
        };
        let delta = buffer.rewards[t] + gamma * next_value * not_done - buffer.values[t];
        next_adv = delta + gamma * lambda * not_done * next_adv;
        advantages[t] = next_adv;
    }
    Ok(advantages)
}

/// Returns `advantages + values`, the regression targets for the critic.
pub fn returns_from_advantages(buffer: &RolloutBuffer, advantages: &[f64]) -> Vec<f64> {
    advantages
        .iter()
        .zip(&buffer.values)
        .map(|(a, v)| a + v)
        .collect()
}

/// Normalizes advantages in place to zero mean and unit (population)
/// standard deviation over the whole buffer, guarding the divisor with
/// `max(std, 1e-8)`.
pub fn normalize_advantages(advantages: &mut [f64]) {
    if advantages.is_empty() {
        return;
    }
    let n = advantages.len() as f64;
    let mean = advantages.iter().sum::<f64>() / n;
    let var = advantages.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
    let std = var.sqrt().max(1e-8);
    for a in advantages.iter_mut() {
        *a = (*a - mean) / std;
    }
}
