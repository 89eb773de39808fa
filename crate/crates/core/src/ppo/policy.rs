//! Gaussian actor-critic policy.
//!
//! The actor MLP outputs the action mean; a state-independent learned
//! `log_std` vector sets the exploration scale. The critic is a separate MLP
//! with a scalar output. Sampled actions are *not* squashed or clamped here
//! — log-probabilities always refer to the raw Gaussian sample, and the
//! environment clamps on its side.

use rand::Rng;
use rand_distr::StandardNormal;

use super::adam::AdamState;
use super::net::{Mlp, MlpGrads};
use super::PpoError;

/// Natural log of 2π, the normalization constant of the Gaussian.
pub const LN_2PI: f64 = 1.8378770664093453;

/// All learnable state of the agent: actor, critic, exploration scale, and
/// the Adam moment estimates that belong to those parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    /// Action-mean network.
    pub actor: Mlp,
    /// State-value network (scalar output).
    pub critic: Mlp,
    /// Per-dimension log standard deviation of the action distribution.
    pub log_std: Vec<f64>,
    /// Optimizer moments and step counter, aligned with the flattened
    /// parameter order (actor, critic, log_std).
    pub adam: AdamState,
}

/// Gradients shaped like [`PolicyParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyGrads {
    /// Actor gradients.
    pub actor: MlpGrads,
    /// Critic gradients.
    pub critic: MlpGrads,
    /// `log_std` gradients.
    pub d_log_std: Vec<f64>,
}

impl PolicyParams {
    /// Total learnable parameter count (actor + critic + log_std).
    pub fn param_count(&self) -> usize {
        self.actor.param_count() + self.critic.param_count() + self.log_std.len()
    }

    /// Observation width the policy expects.
    pub fn obs_dim(&self) -> usize {
        self.actor.input_dim()
    }

    /// Action width the policy produces.
    pub fn act_dim(&self) -> usize {
        self.actor.output_dim()
    }

    /// Zero-filled gradient holder shaped like these parameters.
    pub fn zero_grads(&self) -> PolicyGrads {
        PolicyGrads {
            actor: self.actor.zero_grads(),
            critic: self.critic.zero_grads(),
            d_log_std: vec![0.0; self.log_std.len()],
        }
    }

    /// Visits every `(parameter, gradient)` pair in the canonical flat
    /// order. The same order underlies the Adam moment vectors and the
    /// checkpoint layout.
    pub fn visit_params(&mut self, grads: &PolicyGrads, mut f: impl FnMut(&mut f64, f64)) {
        for (w, gw) in self.actor.weights.iter_mut().zip(&grads.actor.d_weights) {
            for (p, g) in w.iter_mut().zip(gw) {
                f(p, *g);
            }
        }
        for (b, gb) in self.actor.biases.iter_mut().zip(&grads.actor.d_biases) {
            for (p, g) in b.iter_mut().zip(gb) {
                f(p, *g);
            }
        }
        for (w, gw) in self.critic.weights.iter_mut().zip(&grads.critic.d_weights) {
            for (p, g) in w.iter_mut().zip(gw) {
                f(p, *g);
            }
        }
        for (b, gb) in self.critic.biases.iter_mut().zip(&grads.critic.d_biases) {
            for (p, g) in b.iter_mut().zip(gb) {
                f(p, *g);
            }
        }
        for (p, g) in self.log_std.iter_mut().zip(&grads.d_log_std) {
            f(p, *g);
        }
    }
}

/// Hidden-layer gain for orthogonal initialization.
const HIDDEN_GAIN: f64 = std::f64::consts::SQRT_2;
/// Output gain of the actor: small, so initial actions hug the mean of zero.
const ACTOR_OUT_GAIN: f64 = 0.01;
/// Output gain of the critic.
const CRITIC_OUT_GAIN: f64 = 1.0;

/// Builds a freshly initialized policy.
///
/// Weights are orthogonal (gain √2 on hidden layers, 0.01 on the actor
/// output, 1.0 on the critic output), biases zero, `log_std` zero (unit
/// exploration). The same `(obs_dim, act_dim, hidden, rng state)` always
/// produces identical parameters.
pub fn init_policy(
    obs_dim: usize,
    act_dim: usize,
    hidden: &[usize],
    rng: &mut impl Rng,
) -> Result<PolicyParams, PpoError> {
    if obs_dim == 0 || act_dim == 0 {
        return Err(PpoError::Contract(format!(
            "policy dimensions must be positive, got obs_dim={obs_dim}, act_dim={act_dim}"
        )));
    }
    if hidden.is_empty() || hidden.contains(&0) {
        return Err(PpoError::Contract(format!(
            "hidden layout must be non-empty with positive widths, got {hidden:?}"
        )));
    }
    let mut actor_sizes = vec![obs_dim];
    actor_sizes.extend_from_slice(hidden);
    actor_sizes.push(act_dim);
    let mut critic_sizes = vec![obs_dim];
    critic_sizes.extend_from_slice(hidden);
    critic_sizes.push(1);
    let actor = Mlp::orthogonal(&actor_sizes, HIDDEN_GAIN, ACTOR_OUT_GAIN, rng);
    let critic = Mlp::orthogonal(&critic_sizes, HIDDEN_GAIN, CRITIC_OUT_GAIN, rng);
    let param_count =
        actor.param_count() + critic.param_count() + act_dim;
    Ok(PolicyParams {
        actor,
        critic,
        log_std: vec![0.0; act_dim],
        adam: AdamState::new(param_count),
    })
}

/// Log-density of `action` under the diagonal Gaussian `N(mean, exp(log_std)²)`.
pub fn gaussian_log_prob(mean: &[f64], log_std: &[f64], action: &[f64]) -> f64 {
    debug_assert_eq!(mean.len(), action.len());
    let mut lp = 0.0;
    for i in 0..mean.len() {
        let std = log_std[i].exp();
        let z = (action[i] - mean[i]) / std;
        lp += -0.5 * z * z - log_std[i] - 0.5 * LN_2PI;
    }
    lp
}

/// Differential entropy of the diagonal Gaussian with the given `log_std`:
/// `Σ_i (log_std_i + (1 + ln 2π)/2)`.
pub fn gaussian_entropy(log_std: &[f64]) -> f64 {
    log_std.iter().map(|ls| ls + 0.5 * (1.0 + LN_2PI)).sum()
}

/// Samples an action for `obs`, returning `(action, log_prob, value)`.
///
/// The action is the raw Gaussian sample; `log_prob` is its log-density
/// under the current policy, and `value` the critic's estimate for `obs`.
pub fn act(
    params: &PolicyParams,
    obs: &[f64],
    rng: &mut impl Rng,
) -> Result<(Vec<f64>, f64, f64), PpoError> {
    if obs.len() != params.obs_dim() {
        return Err(PpoError::Contract(format!(
            "observation has {} elements, policy expects {}",
            obs.len(),
            params.obs_dim()
        )));
    }
    let mean = params.actor.forward(obs);
    let mut action = Vec::with_capacity(mean.len());
    for i in 0..mean.len() {
        let noise: f64 = rng.sample(StandardNormal);
        action.push(mean[i] + params.log_std[i].exp() * noise);
    }
    let log_prob = gaussian_log_prob(&mean, &params.log_std, &action);
    let value = params.critic.forward(obs)[0];
    Ok((action, log_prob, value))
}

/// Running mean/variance normalizer for observations (Welford update).
///
/// Off by default; the raw testbed feeds unnormalized observations to the
/// policy. When enabled, the harness updates it with every raw observation
/// and feeds the policy the normalized, ±10-clipped version.
#[derive(Debug, Clone, PartialEq)]
pub struct RunningNorm {
    count: f64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl RunningNorm {
    /// Clip bound applied after normalization.
    pub const CLIP: f64 = 10.0;

    /// A fresh normalizer for `dim`-element observations.
    pub fn new(dim: usize) -> Self {
        RunningNorm {
            count: 0.0,
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
        }
    }

    /// Folds one observation into the running statistics.
    pub fn update(&mut self, obs: &[f64]) {
        debug_assert_eq!(obs.len(), self.mean.len());
        self.count += 1.0;
        for i in 0..obs.len() {
            let delta = obs[i] - self.mean[i];
            self.mean[i] += delta / self.count;
            self.m2[i] += delta * (obs[i] - self.mean[i]);
        }
    }

    /// Normalizes `obs` with the current statistics.
    pub fn normalize(&self, obs: &[f64]) -> Vec<f64> {
        if self.count < 2.0 {
            return obs.to_vec();
        }
        let n = self.count;
        obs.iter()
            .enumerate()
            .map(|(i, &x)| {
                let var = self.m2[i] / n;
                ((x - self.mean[i]) / (var + 1e-8).sqrt()).clamp(-Self::CLIP, Self::CLIP)
            })
            .collect()
    }
}
