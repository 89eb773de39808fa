//! Finger forward kinematics.
//!
//! Each finger is a planar two-link chain hanging from a mount point on the
//! palm rim, flexing in its own x-z plane (the index/middle pair is offset in
//! ±y but moves parallel to the manipulation plane). With both joint angles
//! at zero a finger points straight down.
//!
//! Angle conventions, chosen so that *positive flexion of the base joint and
//! negative rotation of the distal joint both curl the finger toward the palm
//! center*:
//!
//! - base joint `q1`: flexion angle of the proximal link toward the palm
//!   center, `φ1 = q1`;
//! - distal joint `q2`: relative extension, so the distal link's flexion is
//!   `φ2 = q1 - q2` (at `q2 = -90°` the distal link points horizontally
//!   toward the center).
//!
//! A flexion angle `φ` maps to the link direction `sin(φ)·u - cos(φ)·ẑ`,
//! where `u` is the horizontal unit vector from the mount toward the palm
//! center (+x for the thumb, -x for index and middle).

use super::params::HandParams;
use super::state::{FingerId, SimState};

/// 3-vector helpers used across the sim. Plain arrays keep the math local
/// and obvious; nothing here warrants a linear-algebra dependency.
pub type Vec3 = [f64; 3];

/// Dot product.
pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Cross product.
pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Euclidean norm.
pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

/// a + s·b.
pub fn add_scaled(a: Vec3, b: Vec3, s: f64) -> Vec3 {
    [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]]
}

/// a - b.
pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// Where a finger attaches to the palm and which way it flexes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FingerMount {
    /// Mount point x (palm rim), m.
    pub x: f64,
    /// Mount point lateral offset from the manipulation plane, m.
    pub y: f64,
    /// Horizontal flexion direction: +1 flexes toward +x, -1 toward -x.
    pub flex_sign: f64,
}

/// Mount geometry for `finger`: the thumb sits alone on the -x side of the
/// rim; index and middle share the +x side, straddling the manipulation
/// plane at ±the configured lateral offset.
pub fn mount(finger: FingerId, hand: &HandParams) -> FingerMount {
    match finger {
        FingerId::Thumb => FingerMount {
            x: -hand.palm_radius,
            y: 0.0,
            flex_sign: 1.0,
        },
        FingerId::Index => FingerMount {
            x: hand.palm_radius,
            y: hand.mount_lateral_offset,
            flex_sign: -1.0,
        },
        FingerId::Middle => FingerMount {
            x: hand.palm_radius,
            y: -hand.mount_lateral_offset,
            flex_sign: -1.0,
        },
    }
}

/// Direction of a link at flexion angle `φ` for a finger flexing toward
/// `flex_sign`·x̂.
fn link_dir(phi: f64, flex_sign: f64) -> Vec3 {
    [flex_sign * phi.sin(), 0.0, -phi.cos()]
}

/// Derivative of [`link_dir`] with respect to `φ`.
fn link_dir_dphi(phi: f64, flex_sign: f64) -> Vec3 {
    [flex_sign * phi.cos(), 0.0, phi.sin()]
}

/// Positions of a finger's joints and tip, plus cached flexion angles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FingerFrame {
    /// Base joint position (the mount point at palm height).
    pub base: Vec3,
    /// Distal joint position.
    pub knuckle: Vec3,
    /// Tip position (far end of the distal link).
    pub tip: Vec3,
    /// Proximal link flexion angle.
    pub phi1: f64,
    /// Distal link flexion angle.
    pub phi2: f64,
    /// Horizontal flexion direction sign.
    pub flex_sign: f64,
}

/// Forward kinematics of one finger in the given state.
pub fn finger_frame(state: &SimState, finger: FingerId, hand: &HandParams) -> FingerFrame {
    let m = mount(finger, hand);
    let q1 = state.q[finger.base_joint()];
    let q2 = state.q[finger.distal_joint()];
    let phi1 = q1;
    let phi2 = q1 - q2;
    let base = [m.x, m.y, state.palm_z];
    let knuckle = add_scaled(base, link_dir(phi1, m.flex_sign), hand.link_length);
    let tip = add_scaled(knuckle, link_dir(phi2, m.flex_sign), hand.link_length);
    FingerFrame {
        base,
        knuckle,
        tip,
        phi1,
        phi2,
        flex_sign: m.flex_sign,
    }
}

/// Fingertip center and pad normal.
///
/// The pad normal is the direction the fingertip pad faces: perpendicular to
/// the distal link, on the flexion side. With the finger straight it points
/// toward the palm center; with the distal link horizontal it points up.
pub fn fingertip_pose(state: &SimState, finger: FingerId, hand: &HandParams) -> (Vec3, Vec3) {
    let f = finger_frame(state, finger, hand);
    (f.tip, link_dir_dphi(f.phi2, f.flex_sign))
}

/// A material point on the distal link, `sigma` ∈ [0, 1] from knuckle to tip,
/// with its partial derivatives with respect to the joint angles and its
/// velocity. The same partials serve as the Jacobian columns that map a
/// contact force at the point back onto joint torques.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistalPoint {
    /// Point position.
    pub pos: Vec3,
    /// ∂pos/∂q1 (base joint).
    pub dq1: Vec3,
    /// ∂pos/∂q2 (distal joint).
    pub dq2: Vec3,
    /// Point velocity including palm vertical motion.
    pub vel: Vec3,
}

/// Kinematics of the distal-link material point at parameter `sigma`.
pub fn distal_point(
    state: &SimState,
    finger: FingerId,
    hand: &HandParams,
    sigma: f64,
) -> DistalPoint {
    let f = finger_frame(state, finger, hand);
    let l = hand.link_length;
    let d1p = link_dir_dphi(f.phi1, f.flex_sign);
    let d2p = link_dir_dphi(f.phi2, f.flex_sign);
    let pos = add_scaled(f.knuckle, sub(f.tip, f.knuckle), sigma);
    // φ1 = q1 and φ2 = q1 - q2, so q1 swings both links while q2 swings only
    // the distal one, in the opposite sense.
    let dq1 = add_scaled(
        [l * d1p[0], 0.0, l * d1p[2]],
        [l * d2p[0], 0.0, l * d2p[2]],
        sigma,
    );
    let dq2 = [-sigma * l * d2p[0], 0.0, -sigma * l * d2p[2]];
    let q1d = state.qd[finger.base_joint()];
    let q2d = state.qd[finger.distal_joint()];
    let mut vel = [0.0, 0.0, state.palm_zd];
    vel = add_scaled(vel, dq1, q1d);
    vel = add_scaled(vel, dq2, q2d);
    DistalPoint { pos, dq1, dq2, vel }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::reset;
    use crate::sim::params::{ObjectId, ObjectParams, SimConfig};
    use approx::assert_relative_eq;

    fn rest_state() -> SimState {
        reset(
            &HandParams::default(),
            &ObjectParams::preset(ObjectId::O1),
            &SimConfig::default(),
        )
        .unwrap()
    }

    #[test]
    fn straight_fingers_point_down() {
        let hand = HandParams::default();
        let state = rest_state();
        for finger in FingerId::ALL {
            let f = finger_frame(&state, finger, &hand);
            let m = mount(finger, &hand);
            assert_relative_eq!(f.tip[0], m.x, epsilon = 1e-15);
            assert_relative_eq!(f.tip[1], m.y, epsilon = 1e-15);
            assert_relative_eq!(f.tip[2], state.palm_z - 2.0 * hand.link_length);
        }
    }

    #[test]
    fn right_angle_curl_matches_trig_oracle() {
        // Base joint at zero, distal joint at -90°: the distal link must run
        // horizontally toward the palm center, so the tip sits one link down
        // and one link inward from the mount. Oracle worked out with plain
        // trigonometry, independently of the link_dir construction.
        let hand = HandParams::default();
        let mut state = rest_state();
        for finger in FingerId::ALL {
            state.q[finger.distal_joint()] = -90.0_f64.to_radians();
        }
        for finger in FingerId::ALL {
            let m = mount(finger, &hand);
            let f = finger_frame(&state, finger, &hand);
            let expect_x = m.x + m.flex_sign * hand.link_length;
            let expect_z = state.palm_z - hand.link_length;
            assert_relative_eq!(f.tip[0], expect_x, epsilon = 1e-12);
            assert_relative_eq!(f.tip[1], m.y, epsilon = 1e-15);
            assert_relative_eq!(f.tip[2], expect_z, epsilon = 1e-12);
        }
    }

    #[test]
    fn generic_angles_match_trig_oracle() {
        // Oracle: sum the two link vectors with explicit sines/cosines for a
        // handful of angle pairs, thumb frame (flexion toward +x).
        let hand = HandParams::default();
        let l = hand.link_length;
        let cases = [(0.3, -0.7), (-0.2, -1.1), (0.6, 0.0), (-0.78, -1.57)];
        for (q1, q2) in cases {
            let mut state = rest_state();
            state.q[0] = q1;
            state.q[1] = q2;
            let f = finger_frame(&state, FingerId::Thumb, &hand);
            let phi2 = q1 - q2;
            let ox = -hand.palm_radius + l * q1.sin() + l * phi2.sin();
            let oz = state.palm_z - l * q1.cos() - l * phi2.cos();
            assert_relative_eq!(f.tip[0], ox, epsilon = 1e-12);
            assert_relative_eq!(f.tip[2], oz, epsilon = 1e-12);
        }
    }

    #[test]
    fn index_and_middle_mirror_in_y_only() {
        let hand = HandParams::default();
        let mut state = rest_state();
        state.q[FingerId::Index.base_joint()] = 0.4;
        state.q[FingerId::Index.distal_joint()] = -0.9;
        state.q[FingerId::Middle.base_joint()] = 0.4;
        state.q[FingerId::Middle.distal_joint()] = -0.9;
        let (tip_i, n_i) = fingertip_pose(&state, FingerId::Index, &hand);
        let (tip_m, n_m) = fingertip_pose(&state, FingerId::Middle, &hand);
        assert_relative_eq!(tip_i[0], tip_m[0]);
        assert_relative_eq!(tip_i[2], tip_m[2]);
        assert_relative_eq!(tip_i[1], -tip_m[1]);
        assert_relative_eq!(tip_i[1], hand.mount_lateral_offset);
        assert_eq!(n_i, n_m);
    }

    #[test]
    fn pad_normal_faces_center_when_straight_and_up_when_curled() {
        let hand = HandParams::default();
        let state = rest_state();
        let (_, n) = fingertip_pose(&state, FingerId::Thumb, &hand);
        assert_relative_eq!(n[0], 1.0);
        assert_relative_eq!(n[2], 0.0);
        let (_, n) = fingertip_pose(&state, FingerId::Index, &hand);
        assert_relative_eq!(n[0], -1.0);

        let mut curled = rest_state();
        curled.q[1] = -90.0_f64.to_radians();
        let (_, n) = fingertip_pose(&curled, FingerId::Thumb, &hand);
        assert_relative_eq!(n[0], 0.0, epsilon = 1e-15);
        assert_relative_eq!(n[2], 1.0);
    }

    #[test]
    fn distal_point_partials_match_finite_differences() {
        let hand = HandParams::default();
        let mut state = rest_state();
        state.q = [0.3, -0.5, -0.1, -1.2, 0.44, -0.9];
        let h = 1e-7;
        for finger in FingerId::ALL {
            for sigma in [0.0, 0.37, 1.0] {
                let p = distal_point(&state, finger, &hand, sigma);
                for (joint, analytic) in
                    [(finger.base_joint(), p.dq1), (finger.distal_joint(), p.dq2)]
                {
                    let mut plus = state.clone();
                    plus.q[joint] += h;
                    let mut minus = state.clone();
                    minus.q[joint] -= h;
                    let pp = distal_point(&plus, finger, &hand, sigma).pos;
                    let pm = distal_point(&minus, finger, &hand, sigma).pos;
                    for k in 0..3 {
                        let fd = (pp[k] - pm[k]) / (2.0 * h);
                        assert_relative_eq!(analytic[k], fd, epsilon = 1e-6);
                    }
                }
            }
        }
    }

    #[test]
    fn distal_point_velocity_is_consistent_with_partials() {
        let hand = HandParams::default();
        let mut state = rest_state();
        state.q = [0.2, -0.4, 0.1, -0.8, -0.3, -0.2];
        state.qd = [0.5, -1.0, 0.25, 0.75, -0.6, 0.1];
        state.palm_zd = -0.2;
        for finger in FingerId::ALL {
            let p = distal_point(&state, finger, &hand, 0.7);
            let q1d = state.qd[finger.base_joint()];
            let q2d = state.qd[finger.distal_joint()];
            for k in 0..3 {
                let expected = p.dq1[k] * q1d
                    + p.dq2[k] * q2d
                    + if k == 2 { state.palm_zd } else { 0.0 };
                assert_relative_eq!(p.vel[k], expected, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn vector_helpers() {
        assert_relative_eq!(dot([1.0, 2.0, 3.0], [4.0, -5.0, 6.0]), 12.0);
        assert_eq!(cross([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]), [0.0, 0.0, 1.0]);
        assert_relative_eq!(norm([3.0, 0.0, 4.0]), 5.0);
    }
}
