//! The per-episode PPO update: GAE once, then shuffled minibatch epochs.
//!
//! One call consumes one rollout buffer. Advantages and return targets come
//! from the pre-update critic values stored in the buffer; the advantage
//! vector is normalized once over the whole buffer. Every epoch reshuffles
//! the transition indices and walks them in `minibatch_size` chunks — a
//! short final chunk is kept, not dropped — applying one Adam step per
//! minibatch. The whole routine is a deterministic function of
//! `(params, buffer, hyper, lr, rng state)`.

use rand::seq::SliceRandom;
use rand::Rng;

use super::adam::adam_step;
use super::gae::{compute_gae, normalize_advantages, returns_from_advantages, RolloutBuffer};
use super::loss::{ppo_loss, LossTerms};
use super::policy::PolicyParams;
use super::{PpoError, PpoHyperparams};

/// Diagnostics from one full update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateStats {
    /// Loss terms averaged over all minibatches of all epochs.
    pub loss: LossTerms,
    /// Number of minibatches processed (= Adam steps taken).
    pub minibatches: usize,
}

/// Runs the PPO update on `buffer` with learning rate `lr`, mutating
/// `params` in place.
pub fn update(
    params: &mut PolicyParams,
    buffer: &RolloutBuffer,
    hyper: &PpoHyperparams,
    lr: f64,
    rng: &mut impl Rng,
) -> Result<UpdateStats, PpoError> {
    hyper.validate()?;
    if !lr.is_finite() || lr < 0.0 {
        return Err(PpoError::Contract(format!(
            "learning rate must be finite and non-negative, got {lr}"
        )));
    }
    if buffer.is_empty() {
        return Err(PpoError::Contract("empty rollout buffer".into()));
    }

    // Targets are fixed for the whole update, from pre-update values.
    let raw_advantages = compute_gae(buffer, hyper.gamma, hyper.gae_lambda)?;
    let returns = returns_from_advantages(buffer, &raw_advantages);
    let mut advantages = raw_advantages;
    normalize_advantages(&mut advantages);

    let mut indices: Vec<usize> = (0..buffer.len()).collect();
    let mut sums = [0.0; 6];
    let mut minibatches = 0usize;
    for _epoch in 0..hyper.epochs {
        indices.shuffle(rng);
        for chunk in indices.chunks(hyper.minibatch_size) {
            let (terms, grads) = ppo_loss(params, buffer, &advantages, &returns, chunk, hyper)?;
            adam_step(params, &grads, lr, hyper);
            sums[0] += terms.total;
            sums[1] += terms.policy;
            sums[2] += terms.value;
            sums[3] += terms.entropy;
            sums[4] += terms.mean_ratio;
            sums[5] += terms.clip_fraction;
            minibatches += 1;
        }
    }

    let n = minibatches as f64;
    Ok(UpdateStats {
        loss: LossTerms {
            total: sums[0] / n,
            policy: sums[1] / n,
            value: sums[2] / n,
            entropy: sums[3] / n,
            mean_ratio: sums[4] / n,
            clip_fraction: sums[5] / n,
        },
        minibatches,
    })
}
