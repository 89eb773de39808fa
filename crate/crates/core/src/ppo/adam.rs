//! Adam optimizer over the flattened policy parameters.
//!
//! Moments live in two flat vectors aligned with the canonical parameter
//! order defined by [`PolicyParams::visit_params`]. One shared step counter
//! is incremented once per [`adam_step`] call, so bias correction is uniform
//! across all parameters.
//!
//! [`PolicyParams::visit_params`]: super::policy::PolicyParams::visit_params

use super::policy::{PolicyGrads, PolicyParams};
use super::PpoHyperparams;

/// First and second moment estimates plus the shared step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    /// First-moment (mean) estimates, flat.
    pub m: Vec<f64>,
    /// Second-moment (uncentered variance) estimates, flat.
    pub v: Vec<f64>,
    /// Number of optimizer steps taken so far.
    pub step: u64,
}

impl AdamState {
    /// Fresh zeroed moments for `param_count` parameters.
    pub fn new(param_count: usize) -> Self {
        AdamState {
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
            step: 0,
        }
    }

    /// Number of parameters the moments cover.
    pub fn len(&self) -> usize {
        self.m.len()
    }

    /// True when the state covers no parameters.
    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }
}

/// Applies one Adam update with learning rate `lr` to every parameter:
///
/// ```text
/// m ← β₁·m + (1−β₁)·g        m̂ = m / (1 − β₁^t)
/// v ← β₂·v + (1−β₂)·g²       v̂ = v / (1 − β₂^t)
/// p ← p − lr · m̂ / (√v̂ + ε)
/// ```
///
/// with `t` the post-increment step counter.
pub fn adam_step(params: &mut PolicyParams, grads: &PolicyGrads, lr: f64, hyper: &PpoHyperparams) {
    let mut adam = std::mem::replace(&mut params.adam, AdamState::new(0));
    adam.step += 1;
    let t = adam.step as i32;
    let bias1 = 1.0 - hyper.adam_beta1.powi(t);
    let bias2 = 1.0 - hyper.adam_beta2.powi(t);
    let mut idx = 0;
    params.visit_params(grads, |p, g| {
        let m = &mut adam.m[idx];
        let v = &mut adam.v[idx];
        *m = hyper.adam_beta1 * *m + (1.0 - hyper.adam_beta1) * g;
        *v = hyper.adam_beta2 * *v + (1.0 - hyper.adam_beta2) * g * g;
        let m_hat = *m / bias1;
        let v_hat = *v / bias2;
        *p -= lr * m_hat / (v_hat.sqrt() + hyper.adam_epsilon);
        idx += 1;
    });
    debug_assert_eq!(idx, adam.len(), "gradient order covers every moment slot");
    params.adam = adam;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ppo::policy::init_policy;
    use crate::rng::{stream_rng, STREAM_POLICY_INIT};
    use approx::assert_relative_eq;

    fn small_policy(seed: u64) -> PolicyParams {
        let mut rng = stream_rng(seed, STREAM_POLICY_INIT);
        init_policy(2, 1, &[3], &mut rng).unwrap()
    }

    #[test]
    fn first_step_moves_each_param_by_lr_times_sign() {
        // At t = 1 the bias-corrected update is exactly g/(|g| + ε'), which
        // is ±1 up to the epsilon correction — independent of |g|.
        let mut p = small_policy(0);
        let before = p.clone();
        let mut grads = p.zero_grads();
        grads.actor.d_weights[0][0] = 4.2;
        grads.actor.d_weights[0][1] = -0.003;
        let hyper = PpoHyperparams::default();
        let lr = 1e-3;
        adam_step(&mut p, &grads, lr, &hyper);
        let d0 = p.actor.weights[0][0] - before.actor.weights[0][0];
        let d1 = p.actor.weights[0][1] - before.actor.weights[0][1];
        assert_relative_eq!(d0, -lr, max_relative = 1e-6);
        assert_relative_eq!(d1, lr, max_relative = 1e-4);
        assert_eq!(p.adam.step, 1);
    }

    #[test]
    fn zero_gradient_leaves_parameter_unchanged() {
        let mut p = small_policy(1);
        let before = p.clone();
        let grads = p.zero_grads();
        adam_step(&mut p, &grads, 0.1, &PpoHyperparams::default());
        // Zero gradient ⇒ zero moments ⇒ zero update, for every parameter.
        assert_eq!(p.actor.weights, before.actor.weights);
        assert_eq!(p.critic.weights, before.critic.weights);
        assert_eq!(p.log_std, before.log_std);
        assert_eq!(p.adam.step, 1);
    }

    #[test]
    fn moments_accumulate_with_exponential_decay() {
        let mut p = small_policy(2);
        let mut grads = p.zero_grads();
        grads.d_log_std[0] = 2.0;
        let hyper = PpoHyperparams::default();
        adam_step(&mut p, &grads, 1e-3, &hyper);
        adam_step(&mut p, &grads, 1e-3, &hyper);
        // m after two identical gradients g: (1−β₁)(β₁+1)·g
        let g = 2.0;
        let m_expect = (1.0 - hyper.adam_beta1) * (hyper.adam_beta1 + 1.0) * g;
        let v_expect = (1.0 - hyper.adam_beta2) * (hyper.adam_beta2 + 1.0) * g * g;
        let log_std_slot = p.adam.len() - p.log_std.len();
        assert_relative_eq!(p.adam.m[log_std_slot], m_expect, epsilon = 1e-15);
        assert_relative_eq!(p.adam.v[log_std_slot], v_expect, epsilon = 1e-15);
        assert_eq!(p.adam.step, 2);
    }

    #[test]
    fn hand_computed_two_step_trajectory() {
        // Single tracked parameter, g = 1 then g = 0.5; compare against the
        // textbook recurrence evaluated by hand.
        let mut p = small_policy(3);
        let start = p.log_std[0];
        let hyper = PpoHyperparams::default();
        let lr = 0.01;
        let (b1, b2, eps) = (hyper.adam_beta1, hyper.adam_beta2, hyper.adam_epsilon);

        let mut grads = p.zero_grads();
        grads.d_log_std[0] = 1.0;
        adam_step(&mut p, &grads, lr, &hyper);
        let m1 = (1.0 - b1) * 1.0;
        let v1 = (1.0 - b2) * 1.0;
        let x1 = start - lr * (m1 / (1.0 - b1)) / ((v1 / (1.0 - b2)).sqrt() + eps);
        assert_relative_eq!(p.log_std[0], x1, epsilon = 1e-15);

        grads.d_log_std[0] = 0.5;
        adam_step(&mut p, &grads, lr, &hyper);
        let m2 = b1 * m1 + (1.0 - b1) * 0.5;
        let v2 = b2 * v1 + (1.0 - b2) * 0.25;
        let x2 = x1
            - lr * (m2 / (1.0 - b1 * b1)) / ((v2 / (1.0 - b2 * b2)).sqrt() + eps);
        assert_relative_eq!(p.log_std[0], x2, epsilon = 1e-15);
    }
}
