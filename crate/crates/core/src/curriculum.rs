//! Reward definition, the five two-phase reward curricula, and the
//! learning-rate schedule that is tied to the curriculum's phase switch.
//!
//! The reward for one control step is
//!
//! ```text
//! r = c_R·θ̇ - c_L·κ·|lift - desired_lift|
//! ```
//!
//! where `θ̇` is the ball's spin rate about +y (rad/s), `lift` is the height
//! of the ball's lowest point, and `κ` converts the height error to
//! centimeters so both terms live on comparable scales. A curriculum is a
//! pair of `(c_R, c_L)` settings, one per half of the training run: reward a
//! single skill first, then both, or start with both and drop one.
//!
//! Training runs `episodes` episodes of `steps_per_episode` control steps;
//! the coefficient switch happens at the half-way episode and the
//! learning-rate schedule breaks at exactly the same cumulative sample
//! count, whatever the configured run length.

use serde::{Deserialize, Serialize};
use std::str::FromStr;
use thiserror::Error;

use crate::sim::FULL_TURN;

/// Reward term weights `(c_R, c_L)` during one curriculum phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardCoefficients {
    /// Weight on the ball spin rate.
    pub rotation: f64,
    /// Weight on the lift error penalty.
    pub lift: f64,
}

impl RewardCoefficients {
    /// Weights used whenever a phase rewards both skills.
    pub const BOTH: RewardCoefficients = RewardCoefficients {
        rotation: 0.51,
        lift: 0.49,
    };
    /// Weights for a rotation-only phase.
    pub const ROTATION_ONLY: RewardCoefficients = RewardCoefficients {
        rotation: 0.51,
        lift: 0.0,
    };
    /// Weights for a lift-only phase.
    pub const LIFT_ONLY: RewardCoefficients = RewardCoefficients {
        rotation: 0.0,
        lift: 0.49,
    };
}

/// The five reward curricula.
///
/// Writing `R` for rotation, `L` for lift, phases are `[first | second]`:
/// C1 = `[L | R+L]`, C2 = `[R | R+L]`, C3 = `[R+L | R+L]` (the no-curriculum
/// baseline), C4 = `[R+L | R]`, C5 = `[R+L | L]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CurriculumId {
    /// Lift first, then both.
    C1,
    /// Rotation first, then both.
    C2,
    /// Both throughout (constant reward).
    C3,
    /// Both first, then rotation only.
    C4,
    /// Both first, then lift only.
    C5,
}

impl CurriculumId {
    /// All curricula in id order.
    pub const ALL: [CurriculumId; 5] = [
        CurriculumId::C1,
        CurriculumId::C2,
        CurriculumId::C3,
        CurriculumId::C4,
        CurriculumId::C5,
    ];

    /// Canonical name ("C1".."C5").
    pub fn name(&self) -> &'static str {
        match self {
            CurriculumId::C1 => "C1",
            CurriculumId::C2 => "C2",
            CurriculumId::C3 => "C3",
            CurriculumId::C4 => "C4",
            CurriculumId::C5 => "C5",
        }
    }

    /// Phase coefficient pair `(first, second)` for this curriculum.
    pub fn phases(&self) -> (RewardCoefficients, RewardCoefficients) {
        use RewardCoefficients as RC;
        match self {
            CurriculumId::C1 => (RC::LIFT_ONLY, RC::BOTH),
            CurriculumId::C2 => (RC::ROTATION_ONLY, RC::BOTH),
            CurriculumId::C3 => (RC::BOTH, RC::BOTH),
            CurriculumId::C4 => (RC::BOTH, RC::ROTATION_ONLY),
            CurriculumId::C5 => (RC::BOTH, RC::LIFT_ONLY),
        }
    }
}

impl FromStr for CurriculumId {
    type Err = CurriculumError;

    fn from_str(s: &str) -> Result<Self, CurriculumError> {
        match s {
            "C1" | "c1" => Ok(CurriculumId::C1),
            "C2" | "c2" => Ok(CurriculumId::C2),
            "C3" | "c3" => Ok(CurriculumId::C3),
            "C4" | "c4" => Ok(CurriculumId::C4),
            "C5" | "c5" => Ok(CurriculumId::C5),
            other => Err(CurriculumError::UnknownCurriculum(other.to_string())),
        }
    }
}

impl std::fmt::Display for CurriculumId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A curriculum instantiated for a concrete run length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurriculumSpec {
    /// Which coefficient table to follow.
    pub id: CurriculumId,
    /// Total episodes in the run.
    pub episodes: usize,
    /// First episode that uses the second phase's coefficients.
    pub switch_episode: usize,
}

impl CurriculumSpec {
    /// Builds the schedule for `episodes` episodes, switching phases at the
    /// half-way point (the first phase keeps the odd episode when the count
    /// is odd, so a one-episode run stays entirely in phase one).
    pub fn new(id: CurriculumId, episodes: usize) -> Self {
        CurriculumSpec {
            id,
            episodes,
            switch_episode: episodes.div_ceil(2),
        }
    }

    /// Coefficients and phase number (1 or 2) for `episode` (0-based).
    pub fn coefficients_at(
        &self,
        episode: usize,
    ) -> Result<(RewardCoefficients, u8), CurriculumError> {
        if episode >= self.episodes {
            return Err(CurriculumError::EpisodeOutOfRange {
                episode,
                episodes: self.episodes,
            });
        }
        let (first, second) = self.id.phases();
        if episode < self.switch_episode {
            Ok((first, 1))
        } else {
            Ok((second, 2))
        }
    }
}

/// Task geometry the reward and success metrics measure against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskTarget {
    /// Lift (ball bottom height) that solves the task, m.
    pub desired_lift: f64,
}

impl TaskTarget {
    /// Half-width of the band around the desired lift that counts as a lift
    /// success, m.
    pub const BAND_HALFWIDTH: f64 = 0.004;

    /// Target for a ball with the given desired center height and radius.
    pub fn new(desired_center_height: f64, radius: f64) -> Self {
        TaskTarget {
            desired_lift: desired_center_height - radius,
        }
    }
}

/// Scale that converts the lift error to the reward's height unit. The
/// default measures the error in centimeters.
pub const LIFT_ERROR_SCALE: f64 = 100.0;

/// Reward for one control step.
///
/// `rotation_rate` is θ̇ in rad/s, `lift` in meters; both are read from the
/// post-step state. Monotone increasing in `rotation_rate` (strictly, when
/// `coeffs.rotation > 0`) and monotone non-increasing in `|lift error|`.
pub fn step_reward(
    rotation_rate: f64,
    lift: f64,
    target: &TaskTarget,
    coeffs: &RewardCoefficients,
    lift_error_scale: f64,
) -> f64 {
    coeffs.rotation * rotation_rate
        - coeffs.lift * lift_error_scale * (lift - target.desired_lift).abs()
}

/// Whether a lift counts as successful: within the fixed ±4 mm band around
/// the desired lift, inclusive at both edges.
pub fn in_target_band(lift: f64, target: &TaskTarget) -> bool {
    (lift - target.desired_lift).abs() <= TaskTarget::BAND_HALFWIDTH
}

/// Learning-rate schedule shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchedulerKind {
    /// `φ` throughout.
    Constant,
    /// One ramp from `φ` to zero across the whole run.
    Linear,
    /// Two ramps: `φ` to zero across phase one, then restart at `η/2`'s ramp
    /// — `η·(1 - n/total)` — across phase two.
    Piecewise,
}

impl SchedulerKind {
    /// Canonical name used by the CLI and output files.
    pub fn name(&self) -> &'static str {
        match self {
            SchedulerKind::Constant => "constant",
            SchedulerKind::Linear => "linear",
            SchedulerKind::Piecewise => "piecewise",
        }
    }
}

impl FromStr for SchedulerKind {
    type Err = CurriculumError;

    fn from_str(s: &str) -> Result<Self, CurriculumError> {
        match s {
            "constant" => Ok(SchedulerKind::Constant),
            "linear" => Ok(SchedulerKind::Linear),
            "piecewise" => Ok(SchedulerKind::Piecewise),
            other => Err(CurriculumError::UnknownScheduler(other.to_string())),
        }
    }
}

impl std::fmt::Display for SchedulerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A learning-rate schedule over cumulative environment samples.
///
/// `phase1_samples` always coincides with the curriculum's phase switch and
/// `total_samples` with the end of the run, so the piecewise break fires
/// exactly when the reward changes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrSchedule {
    /// Schedule shape.
    pub kind: SchedulerKind,
    /// Initial rate of phase one.
    pub phi: f64,
    /// Rate scale of phase two under the piecewise schedule.
    pub eta: f64,
    /// Samples in phase one.
    pub phase1_samples: u64,
    /// Samples in the whole run.
    pub total_samples: u64,
}

impl LrSchedule {
    /// Schedule for a run of `episodes` episodes of `steps_per_episode`
    /// samples each, breaking at the curriculum's phase switch.
    pub fn for_run(
        kind: SchedulerKind,
        phi: f64,
        eta: f64,
        episodes: usize,
        steps_per_episode: usize,
    ) -> Self {
        let switch = episodes.div_ceil(2);
        LrSchedule {
            kind,
            phi,
            eta,
            phase1_samples: (switch * steps_per_episode) as u64,
            total_samples: (episodes * steps_per_episode) as u64,
        }
    }

    /// Learning rate after `samples` cumulative environment samples.
    ///
    /// - constant: `φ`
    /// - linear: `φ·(1 - n/total)`
    /// - piecewise: `φ·(1 - n/phase1)` while `n ≤ phase1`, then
    ///   `η·(1 - n/total)`
    pub fn learning_rate(&self, samples: u64) -> Result<f64, CurriculumError> {
        if samples > self.total_samples {
            return Err(CurriculumError::SampleOutOfRange {
                samples,
                total: self.total_samples,
            });
        }
        let n = samples as f64;
        Ok(match self.kind {
            SchedulerKind::Constant => self.phi,
            SchedulerKind::Linear => self.phi * (1.0 - n / self.total_samples as f64),
            SchedulerKind::Piecewise => {
                if samples <= self.phase1_samples {
                    self.phi * (1.0 - n / self.phase1_samples as f64)
                } else {
                    self.eta * (1.0 - n / self.total_samples as f64)
                }
            }
        })
    }
}

/// Errors from curriculum or schedule lookups.
#[derive(Debug, Error)]
pub enum CurriculumError {
    /// Unknown curriculum id string.
    #[error("unknown curriculum {0:?} (expected C1..C5)")]
    UnknownCurriculum(String),
    /// Unknown scheduler kind string.
    #[error("unknown scheduler {0:?} (expected constant, linear, or piecewise)")]
    UnknownScheduler(String),
    /// Episode index past the end of the run.
    #[error("episode {episode} out of range (run has {episodes} episodes)")]
    EpisodeOutOfRange {
        /// Requested episode.
        episode: usize,
        /// Configured run length.
        episodes: usize,
    },
    /// Sample count past the end of the schedule.
    #[error("sample count {samples} out of range (schedule covers {total})")]
    SampleOutOfRange {
        /// Requested cumulative sample count.
        samples: u64,
        /// Configured total samples.
        total: u64,
    },
}

/// Net rotation in completed revolutions, clamping retrograde net motion to
/// zero (used by the metrics layer; the *reward* keeps its sign).
pub fn completed_rotations(net_rotation: f64) -> f64 {
    (net_rotation / FULL_TURN).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Reference run length: 2,000 episodes of 1,000 steps.
    fn reference_spec(id: CurriculumId) -> CurriculumSpec {
        CurriculumSpec::new(id, 2000)
    }

    #[test]
    fn curriculum_table_is_exact() {
        use RewardCoefficients as RC;
        let expect: [(CurriculumId, RC, RC); 5] = [
            (CurriculumId::C1, RC::LIFT_ONLY, RC::BOTH),
            (CurriculumId::C2, RC::ROTATION_ONLY, RC::BOTH),
            (CurriculumId::C3, RC::BOTH, RC::BOTH),
            (CurriculumId::C4, RC::BOTH, RC::ROTATION_ONLY),
            (CurriculumId::C5, RC::BOTH, RC::LIFT_ONLY),
        ];
        for (id, first, second) in expect {
            let spec = reference_spec(id);
            assert_eq!(spec.switch_episode, 1000);
            let (c, phase) = spec.coefficients_at(0).unwrap();
            assert_eq!((c, phase), (first, 1));
            let (c, phase) = spec.coefficients_at(999).unwrap();
            assert_eq!((c, phase), (first, 1));
            let (c, phase) = spec.coefficients_at(1000).unwrap();
            assert_eq!((c, phase), (second, 2));
            let (c, phase) = spec.coefficients_at(1999).unwrap();
            assert_eq!((c, phase), (second, 2));
        }
        assert!(reference_spec(CurriculumId::C1).coefficients_at(2000).is_err());
    }

    #[test]
    fn odd_and_tiny_run_lengths_keep_phase_one_first() {
        let spec = CurriculumSpec::new(CurriculumId::C1, 1);
        assert_eq!(spec.coefficients_at(0).unwrap().1, 1);
        let spec = CurriculumSpec::new(CurriculumId::C1, 3);
        assert_eq!(spec.switch_episode, 2);
        assert_eq!(spec.coefficients_at(1).unwrap().1, 1);
        assert_eq!(spec.coefficients_at(2).unwrap().1, 2);
    }

    #[test]
    fn reward_matches_hand_computed_example() {
        // θ̇ = 2 rad/s, lift 10 mm above target, both-skills weights:
        // 0.51·2 - 0.49·(1 cm) = 0.53.
        let target = TaskTarget { desired_lift: 0.025 };
        let r = step_reward(2.0, 0.035, &target, &RewardCoefficients::BOTH, LIFT_ERROR_SCALE);
        assert_relative_eq!(r, 0.53, epsilon = 1e-12);
        // Perfect lift with backspin is penalized through the rotation term.
        let r = step_reward(-1.0, 0.025, &target, &RewardCoefficients::BOTH, LIFT_ERROR_SCALE);
        assert_relative_eq!(r, -0.51, epsilon = 1e-15);
    }

    #[test]
    fn reward_monotonicity_over_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let target = TaskTarget { desired_lift: 0.025 };
        for _ in 0..10_000 {
            let coeffs = RewardCoefficients {
                rotation: rng.gen_range(0.0..1.0),
                lift: rng.gen_range(0.0..1.0),
            };
            let lift = rng.gen_range(-0.05..0.15);
            let rate = rng.gen_range(-30.0_f64..30.0);
            let bump = rng.gen_range(1e-6..5.0);
            // Strictly increasing in rotation rate (positive weight).
            let r0 = step_reward(rate, lift, &target, &coeffs, LIFT_ERROR_SCALE);
            let r1 = step_reward(rate + bump, lift, &target, &coeffs, LIFT_ERROR_SCALE);
            if coeffs.rotation > 0.0 {
                assert!(r1 > r0);
            } else {
                assert_eq!(r1, r0);
            }
            // Non-increasing as the lift error grows.
            let err = lift - target.desired_lift;
            let worse = target.desired_lift + err.signum() * (err.abs() + bump);
            let r2 = step_reward(rate, worse, &target, &coeffs, LIFT_ERROR_SCALE);
            assert!(r2 <= r0 + 1e-12);
        }
    }

    #[test]
    fn target_band_edges_are_inclusive() {
        let target = TaskTarget { desired_lift: 0.025 };
        assert!(in_target_band(0.025, &target));
        assert!(in_target_band(0.021, &target));
        assert!(in_target_band(0.029, &target));
        assert!(!in_target_band(0.0291, &target));
        assert!(!in_target_band(0.0209, &target));
        // The 30 mm-radius balls target a 30 mm lift: band 26..34 mm
        // (checked just inside/outside the edges — the decimal literals
        // 0.026/0.034 sit a few ulps off the computed band).
        let target = TaskTarget::new(0.060, 0.030);
        assert!(in_target_band(0.0339, &target));
        assert!(in_target_band(0.0261, &target));
        assert!(!in_target_band(0.0341, &target));
        assert!(!in_target_band(0.0259, &target));
        // The comparison itself is inclusive: an error bitwise equal to the
        // halfwidth is a success, one ulp more is not.
        let target = TaskTarget { desired_lift: 0.0 };
        assert!(in_target_band(TaskTarget::BAND_HALFWIDTH, &target));
        assert!(in_target_band(-TaskTarget::BAND_HALFWIDTH, &target));
        let one_ulp_out = f64::from_bits(TaskTarget::BAND_HALFWIDTH.to_bits() + 1);
        assert!(!in_target_band(one_ulp_out, &target));
    }

    #[test]
    fn reference_schedule_hits_known_values() {
        // 2,000 episodes × 1,000 steps: piecewise evaluates to φ at 0, φ/2
        // at 500k, 0 at the 1M break, ~η/2 just past it, η/4 at 1.5M, 0 at
        // the end.
        let phi = 1e-5;
        let eta = 2e-5;
        let s = LrSchedule::for_run(SchedulerKind::Piecewise, phi, eta, 2000, 1000);
        assert_eq!(s.phase1_samples, 1_000_000);
        assert_eq!(s.total_samples, 2_000_000);
        assert_relative_eq!(s.learning_rate(0).unwrap(), phi, max_relative = 1e-12);
        assert_relative_eq!(s.learning_rate(500_000).unwrap(), 0.5 * phi, max_relative = 1e-12);
        assert_eq!(s.learning_rate(1_000_000).unwrap(), 0.0);
        assert_relative_eq!(
            s.learning_rate(1_000_001).unwrap(),
            eta * (1.0 - 1_000_001.0 / 2_000_000.0),
            max_relative = 1e-12
        );
        assert_relative_eq!(s.learning_rate(1_500_000).unwrap(), 0.25 * eta, max_relative = 1e-12);
        assert_eq!(s.learning_rate(2_000_000).unwrap(), 0.0);
        assert!(s.learning_rate(2_000_001).is_err());

        let lin = LrSchedule::for_run(SchedulerKind::Linear, phi, eta, 2000, 1000);
        assert_relative_eq!(lin.learning_rate(500_000).unwrap(), 0.75 * phi, max_relative = 1e-12);
        let con = LrSchedule::for_run(SchedulerKind::Constant, phi, eta, 2000, 1000);
        assert_eq!(con.learning_rate(1_999_999).unwrap(), phi);
    }

    #[test]
    fn schedule_break_aligns_with_phase_switch_for_any_length() {
        for episodes in [1usize, 2, 3, 10, 123, 200, 2000] {
            let spec = CurriculumSpec::new(CurriculumId::C5, episodes);
            let sched = LrSchedule::for_run(SchedulerKind::Piecewise, 1e-5, 1e-5, episodes, 1000);
            assert_eq!(sched.phase1_samples, (spec.switch_episode * 1000) as u64);
            assert_eq!(sched.total_samples, (episodes * 1000) as u64);
        }
    }

    #[test]
    fn rates_are_never_negative_across_the_run() {
        for kind in [SchedulerKind::Constant, SchedulerKind::Linear, SchedulerKind::Piecewise] {
            let s = LrSchedule::for_run(kind, 1e-5, 1e-5, 200, 1000);
            for episode in 0..200u64 {
                let lr = s.learning_rate(episode * 1000).unwrap();
                assert!(lr >= 0.0, "{kind:?} produced negative rate at {episode}");
                assert!(lr <= 1e-5 + 1e-20);
            }
        }
    }

    #[test]
    fn completed_rotations_clamp_retrograde() {
        assert_relative_eq!(completed_rotations(2.0 * FULL_TURN), 2.0);
        assert_eq!(completed_rotations(-FULL_TURN), 0.0);
    }

    #[test]
    fn ids_parse_and_print() {
        for id in CurriculumId::ALL {
            assert_eq!(id.name().parse::<CurriculumId>().unwrap(), id);
        }
        assert!("C9".parse::<CurriculumId>().is_err());
        for kind in [SchedulerKind::Constant, SchedulerKind::Linear, SchedulerKind::Piecewise] {
            assert_eq!(kind.name().parse::<SchedulerKind>().unwrap(), kind);
        }
        assert!("cosine".parse::<SchedulerKind>().is_err());
    }
}
