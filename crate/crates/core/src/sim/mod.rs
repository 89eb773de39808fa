//! Deterministic planar rigid-body simulation of the hand-ball system.
//!
//! The model: a palm on a vertical prismatic axis, three two-link fingers
//! (one thumb opposing an index/middle pair) driven by PD position servos,
//! and a ball constrained to the x-z plane that can be touched by the
//! distal-phalanx pads and the ground. SI units throughout; +z is up and the
//! ball spins about +y.
//!
//! Determinism is a hard guarantee: stepping the same state with the same
//! action and parameters produces bit-identical results, with no global
//! state, clocks, or allocation-order effects in the numerics.

pub mod contact;
pub mod engine;
pub mod kinematics;
pub mod params;
pub mod state;

pub use contact::{contact_forces, detect_contacts, ContactBody, ContactForce, ContactPoint};
pub use engine::{mechanical_energy, observe, reset, step, TactileFrame};
pub use kinematics::{finger_frame, fingertip_pose, FingerMount, Vec3};
pub use params::{
    HandParams, ObjectId, ObjectParams, SimConfig, TactileMode, FULL_TURN, G, MM, PER_MM,
};
pub use state::{ActionCommand, FingerId, SimState};

use thiserror::Error;

/// Errors from simulation configuration or stepping.
#[derive(Debug, Error)]
pub enum SimError {
    /// A parameter failed validation at reset.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter {
        /// Offending parameter name.
        name: &'static str,
        /// Why it was rejected.
        reason: String,
    },
    /// The state stopped being finite during integration.
    #[error("simulation diverged (non-finite state) at substep {substep}")]
    Diverged {
        /// Substep index within the control step where divergence was caught.
        substep: usize,
    },
}
