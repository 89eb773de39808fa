//! Simulation state and action types.

use serde::{Deserialize, Serialize};

use super::params::HandParams;

/// The three fingers, in the order they appear in all joint vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FingerId {
    /// Single finger opposing the pair; mounted at -x.
    Thumb,
    /// First of the opposing pair; mounted at +x, +y.
    Index,
    /// Second of the opposing pair; mounted at +x, -y.
    Middle,
}

impl FingerId {
    /// All fingers in joint-vector order.
    pub const ALL: [FingerId; 3] = [FingerId::Thumb, FingerId::Index, FingerId::Middle];

    /// Index of this finger's base joint in the 6-element joint vector.
    pub fn base_joint(&self) -> usize {
        2 * *self as usize
    }

    /// Index of this finger's distal joint in the 6-element joint vector.
    pub fn distal_joint(&self) -> usize {
        self.base_joint() + 1
    }
}

/// Complete mechanical state of the hand-ball system.
///
/// Joint vectors are ordered thumb (base, distal), index (base, distal),
/// middle (base, distal). The ball is constrained to the x-z plane and
/// rotates about the +y axis; coordinates are right-handed with z up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimState {
    /// Joint angles, rad.
    pub q: [f64; 6],
    /// Joint angular velocities, rad/s.
    pub qd: [f64; 6],
    /// Palm height above the ground, m.
    pub palm_z: f64,
    /// Palm vertical velocity, m/s.
    pub palm_zd: f64,
    /// Ball center x, m.
    pub ball_x: f64,
    /// Ball center height, m.
    pub ball_z: f64,
    /// Ball rotation about +y, rad (unwrapped, never reduced mod 2π).
    pub ball_theta: f64,
    /// Ball center velocity x, m/s.
    pub ball_xd: f64,
    /// Ball center vertical velocity, m/s.
    pub ball_zd: f64,
    /// Ball angular velocity about +y, rad/s.
    pub ball_thetad: f64,
}

impl SimState {
    /// Ball lift: height of the ball's lowest point above the ground.
    pub fn lift(&self, ball_radius: f64) -> f64 {
        self.ball_z - ball_radius
    }

    /// True when every entry of the state is finite.
    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(self.qd.iter()).all(|v| v.is_finite())
            && [
                self.palm_z,
                self.palm_zd,
                self.ball_x,
                self.ball_z,
                self.ball_theta,
                self.ball_xd,
                self.ball_zd,
                self.ball_thetad,
            ]
            .iter()
            .all(|v| v.is_finite())
    }
}

/// A policy action: seven values in [-1, 1] mapped affinely onto the six
/// joint position targets and the palm height target.
///
/// Values outside [-1, 1] are clamped at construction; the clamped values are
/// what the servos see. (The learner keeps the raw sample for its own
/// bookkeeping — clamping lives entirely on the environment side.)
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionCommand {
    values: [f64; 7],
}

impl ActionCommand {
    /// Clamps each component into [-1, 1] and wraps it as a command.
    pub fn new(raw: [f64; 7]) -> Self {
        let mut values = raw;
        for v in &mut values {
            *v = v.clamp(-1.0, 1.0);
        }
        ActionCommand { values }
    }

    /// The command that holds a freshly reset hand in place: joint targets at
    /// zero and the palm target at its initial height.
    pub fn hold() -> Self {
        // q1 ranges are symmetric (0 is the midpoint), q2 ranges end at 0
        // (their upper limit), and the palm range ends at the initial height.
        ActionCommand::new([0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 1.0])
    }

    /// Clamped component values.
    pub fn values(&self) -> &[f64; 7] {
        &self.values
    }

    /// Servo target angle for joint `j` (0..6).
    pub fn joint_target(&self, j: usize, hand: &HandParams) -> f64 {
        let (lo, hi) = hand.joint_range(j);
        lo + (self.values[j] + 1.0) / 2.0 * (hi - lo)
    }

    /// Servo target height for the palm.
    pub fn palm_target(&self, hand: &HandParams) -> f64 {
        let lo = hand.min_palm_height();
        lo + (self.values[6] + 1.0) / 2.0 * hand.max_palm_translation
    }
}
