//! Clipped-surrogate loss and its exact gradients.
//!
//! For a minibatch of `N` transitions the objective to minimize is
//!
//! ```text
//! L = −mean[min(ρ·Â, clip(ρ, 1−ε, 1+ε)·Â)]
//!     + c1·mean[(V(s) − R)²]
//!     − c2·mean[H(π(·|s))]
//! ```
//!
//! with ρ the probability ratio `exp(lp_new − lp_old)`, Â the (normalized)
//! advantage, R the return target, and H the Gaussian entropy. Gradients are
//! assembled sample by sample:
//!
//! * the surrogate's derivative w.r.t. ρ is Â on the unclipped branch
//!   (`ρ·Â ≤ clip(ρ)·Â`, ties included) and 0 once the clip saturates;
//! * `∂lp/∂μ_i = (a_i − μ_i)/σ_i²` and `∂lp/∂log_std_i = z_i² − 1` with
//!   `z_i = (a_i − μ_i)/σ_i`;
//! * the entropy term contributes a constant `−c2` per `log_std` dimension
//!   (the entropy of a state-independent Gaussian does not depend on the
//!   sample).

use super::gae::RolloutBuffer;
use super::policy::{gaussian_entropy, gaussian_log_prob, PolicyGrads, PolicyParams};
use super::{PpoError, PpoHyperparams};

/// Scalar diagnostics of one loss evaluation. `policy`, `value`, and
/// `entropy` are reported unweighted; `total` applies the `c1`/`c2`
/// coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossTerms {
    /// Full objective: `policy + c1·value − c2·entropy`.
    pub total: f64,
    /// Negated mean clipped surrogate.
    pub policy: f64,
    /// Mean squared value error (without `c1`).
    pub value: f64,
    /// Mean policy entropy (without `c2`).
    pub entropy: f64,
    /// Mean probability ratio over the minibatch.
    pub mean_ratio: f64,
    /// Fraction of samples with `|ρ − 1| > ε`.
    pub clip_fraction: f64,
}

/// Evaluates the PPO objective and its gradients on the minibatch selected
/// by `indices`. `advantages` and `returns` are indexed the same way as the
/// buffer.
pub fn ppo_loss(
    params: &PolicyParams,
    buffer: &RolloutBuffer,
    advantages: &[f64],
    returns: &[f64],
    indices: &[usize],
    hyper: &PpoHyperparams,
) -> Result<(LossTerms, PolicyGrads), PpoError> {
    if indices.is_empty() {
        return Err(PpoError::Contract("empty minibatch".into()));
    }
    if advantages.len() != buffer.len() || returns.len() != buffer.len() {
        return Err(PpoError::Contract(format!(
            "buffer has {} transitions but {} advantages / {} returns",
            buffer.len(),
            advantages.len(),
            returns.len()
        )));
    }
    if let Some(&bad) = indices.iter().find(|&&i| i >= buffer.len()) {
        return Err(PpoError::Contract(format!(
            "minibatch index {bad} out of range for buffer of {}",
            buffer.len()
        )));
    }

    let eps = hyper.clip_epsilon;
    let n = indices.len() as f64;
    let act_dim = params.act_dim();
    let mut grads = params.zero_grads();

    let mut surrogate_sum = 0.0;
    let mut value_sum = 0.0;
    let mut ratio_sum = 0.0;
    let mut clipped_count = 0usize;

    for &i in indices {
        let obs = &buffer.observations[i];
        let action = &buffer.actions[i];
        let adv = advantages[i];

        // Policy term.
        let actor_cache = params.actor.forward_cached(obs);
        let mean = actor_cache.output().to_vec();
        let lp_new = gaussian_log_prob(&mean, &params.log_std, action);
        let ratio = (lp_new - buffer.log_probs[i]).exp();
        let clipped_ratio = ratio.clamp(1.0 - eps, 1.0 + eps);
        let unclipped = ratio * adv;
        let clipped = clipped_ratio * adv;
        surrogate_sum += unclipped.min(clipped);
        ratio_sum += ratio;
        if (ratio - 1.0).abs() > eps {
            clipped_count += 1;
        }

        // d(surrogate)/dρ: the active min branch. Ties go to the unclipped
        // branch, whose derivative is Â; a saturated clip contributes 0.
        let d_surr_d_ratio = if unclipped <= clipped { adv } else { 0.0 };
        // Loss is −mean(surrogate); dρ/d(lp_new) = ρ.
        let d_lp = -d_surr_d_ratio * ratio / n;
        if d_lp != 0.0 {
            let mut d_mean = vec![0.0; act_dim];
            for k in 0..act_dim {
                let std = params.log_std[k].exp();
                let z = (action[k] - mean[k]) / std;
                d_mean[k] = d_lp * z / std;
                grads.d_log_std[k] += d_lp * (z * z - 1.0);
            }
            params.actor.backward(&actor_cache, &d_mean, &mut grads.actor);
        }

        // Value term.
        let critic_cache = params.critic.forward_cached(obs);
        let v = critic_cache.output()[0];
        let err = v - returns[i];
        value_sum += err * err;
        let d_v = hyper.value_coef * 2.0 * err / n;
        params
            .critic
            .backward(&critic_cache, &[d_v], &mut grads.critic);
    }

    // Entropy bonus: the mean over samples of a sample-independent quantity.
    let entropy = gaussian_entropy(&params.log_std);
    for g in grads.d_log_std.iter_mut() {
        *g -= hyper.entropy_coef;
    }

    let policy = -surrogate_sum / n;
    let value = value_sum / n;
    let total = policy + hyper.value_coef * value - hyper.entropy_coef * entropy;
    if !total.is_finite() {
        return Err(PpoError::NonFinite("ppo loss"));
    }

    Ok((
        LossTerms {
            total,
            policy,
            value,
            entropy,
            mean_ratio: ratio_sum / n,
            clip_fraction: clipped_count as f64 / n,
        },
        grads,
    ))
}
