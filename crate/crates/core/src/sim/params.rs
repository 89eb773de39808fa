//! Physical parameters of the hand, the ball, and the contact model.
//!
//! All fields are SI (kilograms, meters, seconds, newtons, radians). The
//! configuration layer accepts the more convenient grams / millimeters used
//! on the hardware datasheet and converts on the way in; see the CLI crate.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::str::FromStr;

use super::SimError;

/// Millimeters to meters.
pub const MM: f64 = 1e-3;
/// Grams to kilograms.
pub const G: f64 = 1e-3;
/// Stiffness per millimeter to stiffness per meter (N/mm -> N/m).
pub const PER_MM: f64 = 1e3;

/// Geometry, masses, actuation gains, and joint limits of the hand.
///
/// The hand is a disc-shaped palm suspended over the ground on a vertical
/// prismatic axis, with three two-link fingers hanging from its rim: one
/// "thumb" on one side opposing an index/middle pair on the other. Fingers
/// flex toward the palm center; the ball lives in the x-z plane between them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandParams {
    /// Palm mass in kg.
    pub palm_mass: f64,
    /// Mass of one complete finger (both links) in kg.
    pub finger_mass: f64,
    /// Length of each finger link in m.
    pub link_length: f64,
    /// Radius of the phalanx capsules in m.
    pub phalanx_radius: f64,
    /// Palm disc thickness in m (documentation of the reference hardware;
    /// the planar dynamics never consult it).
    pub palm_width: f64,
    /// Palm disc radius in m; finger mount points sit on the rim.
    pub palm_radius: f64,
    /// Lateral (y) offset of the index and middle mounts from the
    /// manipulation plane, in m. The pair straddles the plane at ±this.
    pub mount_lateral_offset: f64,
    /// Palm height above the ground at reset, in m.
    pub initial_palm_height: f64,
    /// Maximum downward travel of the palm from its initial height, in m.
    pub max_palm_translation: f64,
    /// Passive joint damping torque coefficient, N·m·s/rad.
    pub joint_damping: f64,
    /// Base joint range (lo, hi) in rad. Positive flexes toward palm center.
    pub q1_range: (f64, f64),
    /// Distal joint range (lo, hi) in rad. Negative curls toward palm center.
    pub q2_range: (f64, f64),
    /// Joint servo proportional gain, N·m/rad.
    pub servo_kp: f64,
    /// Joint servo derivative gain, N·m·s/rad.
    pub servo_kd: f64,
    /// Palm height servo proportional gain, N/m.
    pub palm_kp: f64,
    /// Palm height servo derivative gain, N·s/m.
    pub palm_kd: f64,
    /// Palm actuator force limit (applies to the servo output), N.
    pub palm_force_limit: f64,
}

impl Default for HandParams {
    fn default() -> Self {
        HandParams {
            palm_mass: 100.0 * G,
            finger_mass: 68.0 * G,
            link_length: 50.0 * MM,
            phalanx_radius: 5.0 * MM,
            palm_width: 20.0 * MM,
            palm_radius: 60.0 * MM,
            mount_lateral_offset: 30.0 * MM,
            initial_palm_height: 200.0 * MM,
            max_palm_translation: 130.0 * MM,
            joint_damping: 5.5e-6,
            q1_range: (-45.0_f64.to_radians(), 45.0_f64.to_radians()),
            q2_range: (-90.0_f64.to_radians(), 0.0),
            servo_kp: 2.0,
            servo_kd: 0.05,
            palm_kp: 500.0,
            palm_kd: 20.0,
            palm_force_limit: 20.0,
        }
    }
}

impl HandParams {
    /// Total mass carried by the palm's vertical axis (palm plus fingers).
    pub fn total_mass(&self) -> f64 {
        self.palm_mass + 3.0 * self.finger_mass
    }

    /// Mass of a single link (half a finger).
    pub fn link_mass(&self) -> f64 {
        self.finger_mass / 2.0
    }

    /// Effective rotational inertia about the base joint, kg·m².
    ///
    /// Each joint is integrated as an independent 1-DOF system. The base
    /// joint carries the proximal link as a rod about its end plus the distal
    /// link in the extended pose: ∫ over a uniform rod spanning [L, 2L] gives
    /// (7/3)·m·L².
    pub fn base_joint_inertia(&self) -> f64 {
        let m = self.link_mass();
        let l2 = self.link_length * self.link_length;
        (m / 3.0) * l2 + (7.0 * m / 3.0) * l2
    }

    /// Effective rotational inertia about the distal joint, kg·m².
    pub fn distal_joint_inertia(&self) -> f64 {
        let m = self.link_mass();
        (m / 3.0) * self.link_length * self.link_length
    }

    /// Inertia of joint `j` in the 6-element joint vector (see
    /// [`crate::sim::SimState::q`] for the ordering).
    pub fn joint_inertia(&self, j: usize) -> f64 {
        if j % 2 == 0 {
            self.base_joint_inertia()
        } else {
            self.distal_joint_inertia()
        }
    }

    /// Lowest height the palm may reach.
    pub fn min_palm_height(&self) -> f64 {
        self.initial_palm_height - self.max_palm_translation
    }

    /// Joint range of joint `j` in the 6-element joint vector.
    pub fn joint_range(&self, j: usize) -> (f64, f64) {
        if j % 2 == 0 {
            self.q1_range
        } else {
            self.q2_range
        }
    }

    /// Checks physical plausibility; called on every reset.
    pub fn validate(&self) -> Result<(), SimError> {
        let positive: [(&str, f64); 8] = [
            ("palm_mass", self.palm_mass),
            ("finger_mass", self.finger_mass),
            ("link_length", self.link_length),
            ("phalanx_radius", self.phalanx_radius),
            ("palm_radius", self.palm_radius),
            ("initial_palm_height", self.initial_palm_height),
            ("max_palm_translation", self.max_palm_translation),
            ("palm_force_limit", self.palm_force_limit),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(SimError::InvalidParameter {
                    name,
                    reason: format!("must be positive and finite, got {v}"),
                });
            }
        }
        for (name, v) in [
            ("palm_width", self.palm_width),
            ("mount_lateral_offset", self.mount_lateral_offset),
            ("joint_damping", self.joint_damping),
            ("servo_kp", self.servo_kp),
            ("servo_kd", self.servo_kd),
            ("palm_kp", self.palm_kp),
            ("palm_kd", self.palm_kd),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(SimError::InvalidParameter {
                    name,
                    reason: format!("must be non-negative and finite, got {v}"),
                });
            }
        }
        for (name, (lo, hi)) in [("q1_range", self.q1_range), ("q2_range", self.q2_range)] {
            if !(lo < hi) {
                return Err(SimError::InvalidParameter {
                    name,
                    reason: format!("range must satisfy lo < hi, got ({lo}, {hi})"),
                });
            }
        }
        if self.max_palm_translation >= self.initial_palm_height {
            return Err(SimError::InvalidParameter {
                name: "max_palm_translation",
                reason: "palm travel must leave the palm above the ground".into(),
            });
        }
        Ok(())
    }
}

/// One of the four ball presets the testbed ships with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ObjectId {
    /// 50 g, 35 mm radius.
    O1,
    /// 50 g, 30 mm radius.
    O2,
    /// 5 g, 35 mm radius.
    O3,
    /// 5 g, 30 mm radius.
    O4,
}

impl ObjectId {
    /// All presets, in id order.
    pub const ALL: [ObjectId; 4] = [ObjectId::O1, ObjectId::O2, ObjectId::O3, ObjectId::O4];

    /// Canonical name ("O1".."O4").
    pub fn name(&self) -> &'static str {
        match self {
            ObjectId::O1 => "O1",
            ObjectId::O2 => "O2",
            ObjectId::O3 => "O3",
            ObjectId::O4 => "O4",
        }
    }
}

impl FromStr for ObjectId {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, SimError> {
        match s {
            "O1" | "o1" => Ok(ObjectId::O1),
            "O2" | "o2" => Ok(ObjectId::O2),
            "O3" | "o3" => Ok(ObjectId::O3),
            "O4" | "o4" => Ok(ObjectId::O4),
            other => Err(SimError::InvalidParameter {
                name: "object",
                reason: format!("unknown object id {other:?} (expected O1..O4)"),
            }),
        }
    }
}

impl std::fmt::Display for ObjectId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Ball parameters: a solid sphere constrained to the x-z plane, held near
/// the hand's workspace by a weak lateral spring and light viscous damping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectParams {
    /// Ball mass, kg.
    pub mass: f64,
    /// Ball radius, m.
    pub radius: f64,
    /// Desired ball center height during the task, m.
    pub desired_center_height: f64,
    /// Lateral restoring spring stiffness, N/m.
    pub stiffness_x: f64,
    /// Lateral damping, N·s/m.
    pub damping_x: f64,
    /// Vertical damping, N·s/m.
    pub damping_z: f64,
    /// Rotational damping about the y axis, N·m·s/rad.
    pub damping_rot: f64,
}

impl ObjectParams {
    /// Preset parameter set for the given ball id.
    pub fn preset(id: ObjectId) -> Self {
        let (mass_g, radius_mm) = match id {
            ObjectId::O1 => (50.0, 35.0),
            ObjectId::O2 => (50.0, 30.0),
            ObjectId::O3 => (5.0, 35.0),
            ObjectId::O4 => (5.0, 30.0),
        };
        // Heavier balls get a stiffer keeper spring and stronger damping so
        // that both weight classes settle on comparable time scales.
        let (stiffness_x, damping_x, damping_rot) = match id {
            ObjectId::O1 | ObjectId::O2 => (5.0e-3 * PER_MM, 3.5e-4 * PER_MM, 5.0e-3),
            ObjectId::O3 | ObjectId::O4 => (1.0e-3 * PER_MM, 7.0e-5 * PER_MM, 1.0e-3),
        };
        let damping_z = match id {
            ObjectId::O1 => 5.0e-4 * PER_MM,
            ObjectId::O2 | ObjectId::O3 | ObjectId::O4 => 2.0e-4 * PER_MM,
        };
        ObjectParams {
            mass: mass_g * G,
            radius: radius_mm * MM,
            desired_center_height: 60.0 * MM,
            stiffness_x,
            damping_x,
            damping_z,
            damping_rot,
        }
    }

    /// Solid-sphere rotational inertia (2/5)·m·r², kg·m².
    pub fn inertia(&self) -> f64 {
        0.4 * self.mass * self.radius * self.radius
    }

    /// Lift that satisfies the task: ball bottom height when the center sits
    /// at the desired height.
    pub fn desired_lift(&self) -> f64 {
        self.desired_center_height - self.radius
    }

    /// Checks physical plausibility; called on every reset.
    pub fn validate(&self) -> Result<(), SimError> {
        for (name, v) in [("mass", self.mass), ("radius", self.radius)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(SimError::InvalidParameter {
                    name,
                    reason: format!("must be positive and finite, got {v}"),
                });
            }
        }
        for (name, v) in [
            ("stiffness_x", self.stiffness_x),
            ("damping_x", self.damping_x),
            ("damping_z", self.damping_z),
            ("damping_rot", self.damping_rot),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(SimError::InvalidParameter {
                    name,
                    reason: format!("must be non-negative and finite, got {v}"),
                });
            }
        }
        if self.desired_center_height <= self.radius {
            return Err(SimError::InvalidParameter {
                name: "desired_center_height",
                reason: format!(
                    "desired center height {} must exceed the ball radius {}",
                    self.desired_center_height, self.radius
                ),
            });
        }
        Ok(())
    }
}

/// Whether fingertip force sensing feeds the observation vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TactileMode {
    /// Proprioception only: joints, joint rates, palm height and rate.
    #[serde(rename = "none")]
    NoTactile,
    /// Adds a 3-axis contact force reading per fingertip pad.
    #[serde(rename = "force3d")]
    Force3D,
}

impl TactileMode {
    /// Number of elements [`crate::sim::observe`] produces in this mode.
    pub fn obs_dim(&self) -> usize {
        match self {
            TactileMode::NoTactile => 14,
            TactileMode::Force3D => 14 + 9,
        }
    }

    /// Canonical name used by the CLI and output files.
    pub fn name(&self) -> &'static str {
        match self {
            TactileMode::NoTactile => "none",
            TactileMode::Force3D => "force3d",
        }
    }
}

impl FromStr for TactileMode {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, SimError> {
        match s {
            "none" | "no_tactile" => Ok(TactileMode::NoTactile),
            "force3d" => Ok(TactileMode::Force3D),
            other => Err(SimError::InvalidParameter {
                name: "tactile",
                reason: format!("unknown tactile mode {other:?} (expected none or force3d)"),
            }),
        }
    }
}

impl std::fmt::Display for TactileMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Integration, gravity, and contact-model settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Gravitational acceleration, m/s².
    pub gravity: f64,
    /// Control interval: one action is held for this long, s.
    pub control_dt: f64,
    /// Physics substeps per control interval.
    pub substeps: usize,
    /// Contact penalty stiffness, N/m.
    pub contact_stiffness: f64,
    /// Contact penalty damping, N·s/m.
    pub contact_damping: f64,
    /// Coulomb friction coefficient.
    pub friction: f64,
    /// Slip speed scale of the smoothed friction law, m/s.
    pub slip_velocity: f64,
    /// Whether the tactile sensor feeds observations.
    pub tactile_mode: TactileMode,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            gravity: 9.81,
            control_dt: 0.010,
            substeps: 10,
            contact_stiffness: 1.0 * PER_MM,
            contact_damping: 0.01 * PER_MM,
            friction: 0.8,
            slip_velocity: 1.0 * MM,
            tactile_mode: TactileMode::NoTactile,
        }
    }
}

impl SimConfig {
    /// Physics integration step, s.
    pub fn substep_dt(&self) -> f64 {
        self.control_dt / self.substeps as f64
    }

    /// Checks integration and contact settings; called on every reset.
    pub fn validate(&self) -> Result<(), SimError> {
        if self.substeps == 0 {
            return Err(SimError::InvalidParameter {
                name: "substeps",
                reason: "must be at least 1".into(),
            });
        }
        for (name, v) in [
            ("control_dt", self.control_dt),
            ("contact_stiffness", self.contact_stiffness),
            ("slip_velocity", self.slip_velocity),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(SimError::InvalidParameter {
                    name,
                    reason: format!("must be positive and finite, got {v}"),
                });
            }
        }
        for (name, v) in [
            ("gravity", self.gravity),
            ("contact_damping", self.contact_damping),
            ("friction", self.friction),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(SimError::InvalidParameter {
                    name,
                    reason: format!("must be non-negative and finite, got {v}"),
                });
            }
        }
        Ok(())
    }
}

/// Angle subtended by a full turn; used when converting net rotation to
/// completed revolutions.
pub const FULL_TURN: f64 = 2.0 * PI;

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn default_hand_masses_and_lengths() {
        let hand = HandParams::default();
        assert_relative_eq!(hand.palm_mass, 0.100);
        assert_relative_eq!(hand.finger_mass, 0.068);
        assert_relative_eq!(hand.total_mass(), 0.304);
        assert_relative_eq!(hand.link_length, 0.050);
        assert_relative_eq!(hand.phalanx_radius, 0.005);
        assert_relative_eq!(hand.min_palm_height(), 0.070);
        hand.validate().unwrap();
    }

    #[test]
    fn joint_ranges_by_index() {
        let hand = HandParams::default();
        for j in [0, 2, 4] {
            let (lo, hi) = hand.joint_range(j);
            assert_relative_eq!(lo, -45.0_f64.to_radians());
            assert_relative_eq!(hi, 45.0_f64.to_radians());
        }
        for j in [1, 3, 5] {
            let (lo, hi) = hand.joint_range(j);
            assert_relative_eq!(lo, -90.0_f64.to_radians());
            assert_relative_eq!(hi, 0.0);
        }
    }

    #[test]
    fn object_presets_match_datasheet() {
        let o1 = ObjectParams::preset(ObjectId::O1);
        assert_relative_eq!(o1.mass, 0.050);
        assert_relative_eq!(o1.radius, 0.035);
        assert_relative_eq!(o1.stiffness_x, 5.0);
        assert_relative_eq!(o1.damping_x, 0.35);
        assert_relative_eq!(o1.damping_z, 0.5);
        assert_relative_eq!(o1.damping_rot, 5.0e-3);
        assert_relative_eq!(o1.desired_lift(), 0.025);

        let o2 = ObjectParams::preset(ObjectId::O2);
        assert_relative_eq!(o2.mass, 0.050);
        assert_relative_eq!(o2.radius, 0.030);
        assert_relative_eq!(o2.damping_z, 0.2);
        assert_relative_eq!(o2.desired_lift(), 0.030);

        let o3 = ObjectParams::preset(ObjectId::O3);
        assert_relative_eq!(o3.mass, 0.005);
        assert_relative_eq!(o3.radius, 0.035);
        assert_relative_eq!(o3.stiffness_x, 1.0);
        assert_relative_eq!(o3.damping_x, 0.07);
        assert_relative_eq!(o3.damping_rot, 1.0e-3);

        let o4 = ObjectParams::preset(ObjectId::O4);
        assert_relative_eq!(o4.mass, 0.005);
        assert_relative_eq!(o4.radius, 0.030);
        for id in ObjectId::ALL {
            ObjectParams::preset(id).validate().unwrap();
        }
    }

    #[test]
    fn sphere_inertia_matches_closed_form() {
        let o1 = ObjectParams::preset(ObjectId::O1);
        // (2/5)·0.05·0.035² computed by hand.
        assert_relative_eq!(o1.inertia(), 2.45e-5, max_relative = 1e-12);
    }

    #[test]
    fn obs_dims_per_mode() {
        assert_eq!(TactileMode::NoTactile.obs_dim(), 14);
        assert_eq!(TactileMode::Force3D.obs_dim(), 23);
    }

    #[test]
    fn validation_rejects_nonsense() {
        let mut hand = HandParams::default();
        hand.link_length = -0.05;
        assert!(hand.validate().is_err());

        let mut obj = ObjectParams::preset(ObjectId::O1);
        obj.desired_center_height = 0.030; // below the 35 mm radius
        assert!(obj.validate().is_err());

        let mut cfg = SimConfig::default();
        cfg.substeps = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn ids_parse_and_print() {
        for id in ObjectId::ALL {
            assert_eq!(id.name().parse::<ObjectId>().unwrap(), id);
        }
        assert!("O9".parse::<ObjectId>().is_err());
        assert_eq!("none".parse::<TactileMode>().unwrap(), TactileMode::NoTactile);
        assert_eq!("force3d".parse::<TactileMode>().unwrap(), TactileMode::Force3D);
        assert!("sight".parse::<TactileMode>().is_err());
    }
}
