//! Contact detection and penalty contact forces.
//!
//! Only two kinds of pairs exist in this model: each finger's distal-phalanx
//! capsule against the ball, and the ball against the ground plane. Proximal
//! phalanges, finger-finger, and finger-ground pairs never touch anything in
//! the workspace this hand operates in, so they are not collided.
//!
//! Normal force is a one-sided spring-damper on the penetration depth,
//! `f_n = max(0, k_c·δ + b_c·δ̇)` — never adhesive. Friction is regularized
//! Coulomb: `μ·f_n·tanh(|v_t|/v_eps)` opposing the tangential slip velocity,
//! additionally capped by the impulse that would bring the slip to rest
//! within one substep. The cap keeps near-sticking contacts from chattering
//! at the integration step while never exceeding the Coulomb cone.

use super::kinematics::{cross, distal_point, dot, finger_frame, norm, sub, Vec3};
use super::params::{HandParams, ObjectParams, SimConfig};
use super::state::{FingerId, SimState};

/// Which pair of bodies a contact belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContactBody {
    /// A distal-phalanx pad against the ball.
    Finger(FingerId),
    /// The ground plane against the ball.
    Ground,
}

/// One detected contact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactPoint {
    /// The non-ball body involved.
    pub body: ContactBody,
    /// Force application point: the closest point on the capsule axis (or on
    /// the ground plane, directly below the ball center).
    pub point: Vec3,
    /// Unit normal pointing from `point` toward the ball center.
    pub normal: Vec3,
    /// Penetration depth, m; strictly positive for reported contacts.
    pub penetration: f64,
    /// Distal-link parameter of `point` (0 = knuckle, 1 = tip); 0 for ground.
    pub sigma: f64,
}

/// All current contacts, in a fixed order: thumb, index, middle, ground.
///
/// A touching pair with exactly zero penetration is not a contact.
pub fn detect_contacts(
    state: &SimState,
    hand: &HandParams,
    object: &ObjectParams,
) -> Vec<ContactPoint> {
    let mut contacts = Vec::with_capacity(4);
    let center = [state.ball_x, 0.0, state.ball_z];
    let reach = object.radius + hand.phalanx_radius;
    for finger in FingerId::ALL {
        let f = finger_frame(state, finger, hand);
        let axis = sub(f.tip, f.knuckle);
        let rel = sub(center, f.knuckle);
        let len2 = dot(axis, axis);
        let sigma = if len2 > 0.0 {
            (dot(rel, axis) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let closest = [
            f.knuckle[0] + sigma * axis[0],
            f.knuckle[1] + sigma * axis[1],
            f.knuckle[2] + sigma * axis[2],
        ];
        let offset = sub(center, closest);
        let dist = norm(offset);
        let penetration = reach - dist;
        if penetration > 0.0 && dist > 1e-12 {
            contacts.push(ContactPoint {
                body: ContactBody::Finger(finger),
                point: closest,
                normal: [offset[0] / dist, offset[1] / dist, offset[2] / dist],
                penetration,
                sigma,
            });
        }
    }
    let ground_pen = object.radius - state.ball_z;
    if ground_pen > 0.0 {
        contacts.push(ContactPoint {
            body: ContactBody::Ground,
            point: [state.ball_x, 0.0, 0.0],
            normal: [0.0, 0.0, 1.0],
            penetration: ground_pen,
            sigma: 0.0,
        });
    }
    contacts
}

/// Resolved force at one contact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactForce {
    /// The contact this force resolves.
    pub contact: ContactPoint,
    /// Normal force magnitude along `contact.normal`, ≥ 0.
    pub normal_force: f64,
    /// Friction force vector acting on the ball.
    pub friction: Vec3,
}

impl ContactForce {
    /// Total force this contact applies to the ball.
    pub fn force_on_ball(&self) -> Vec3 {
        [
            self.normal_force * self.contact.normal[0] + self.friction[0],
            self.normal_force * self.contact.normal[1] + self.friction[1],
            self.normal_force * self.contact.normal[2] + self.friction[2],
        ]
    }
}

/// Contact forces mapped onto the system's degrees of freedom.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GeneralizedForces {
    /// Torque on each joint from contact reactions, N·m.
    pub joint_torques: [f64; 6],
    /// Vertical contact reaction on the palm axis, N.
    pub palm_force_z: f64,
    /// Net contact force on the ball (y component is absorbed by the planar
    /// constraint and never integrated), N.
    pub ball_force: Vec3,
    /// Net contact torque on the ball about +y, N·m.
    pub ball_torque_y: f64,
}

/// Resolves every detected contact into forces and folds them onto the
/// generalized coordinates.
///
/// `dt` is the integration substep, used only by the friction impulse cap.
pub fn contact_forces(
    state: &SimState,
    contacts: &[ContactPoint],
    hand: &HandParams,
    object: &ObjectParams,
    config: &SimConfig,
    dt: f64,
) -> (Vec<ContactForce>, GeneralizedForces) {
    let mut resolved = Vec::with_capacity(contacts.len());
    let mut gen = GeneralizedForces::default();
    let ball_center = [state.ball_x, 0.0, state.ball_z];
    let ball_v = [state.ball_xd, 0.0, state.ball_zd];
    let inertia = object.inertia();

    for c in contacts {
        // Velocity of the other body's material point at the contact.
        let other = match c.body {
            ContactBody::Finger(finger) => Some(distal_point(state, finger, hand, c.sigma)),
            ContactBody::Ground => None,
        };
        let v_other = other.map_or([0.0; 3], |p| p.vel);

        // Penetration rate: positive while the pair approaches. Measured at
        // the ball *center* because the normal passes through it.
        let closing = dot(sub(v_other, ball_v), c.normal);
        let normal_force =
            (config.contact_stiffness * c.penetration + config.contact_damping * closing).max(0.0);

        // Slip velocity of the ball surface relative to the other body.
        let r = sub(c.point, ball_center);
        let spin = [
            state.ball_thetad * r[2],
            0.0,
            -state.ball_thetad * r[0],
        ];
        let v_ball_surface = [ball_v[0] + spin[0], spin[1], ball_v[2] + spin[2]];
        let v_rel = sub(v_ball_surface, v_other);
        let v_norm = dot(v_rel, c.normal);
        let v_tan = [
            v_rel[0] - v_norm * c.normal[0],
            v_rel[1] - v_norm * c.normal[1],
            v_rel[2] - v_norm * c.normal[2],
        ];
        let slip = norm(v_tan);

        let friction = if normal_force > 0.0 && slip > 1e-15 {
            let t_hat = [v_tan[0] / slip, v_tan[1] / slip, v_tan[2] / slip];
            let mut magnitude =
                config.friction * normal_force * (slip / config.slip_velocity).tanh();
            // Impulse cap: never push the slip past zero within one substep.
            let lever_ball = r[2] * t_hat[0] - r[0] * t_hat[2];
            let mut inv_mass = (t_hat[0] * t_hat[0] + t_hat[2] * t_hat[2]) / object.mass
                + lever_ball * lever_ball / inertia;
            if let Some(p) = other {
                let j1 = dot(p.dq1, t_hat);
                let j2 = dot(p.dq2, t_hat);
                let (i1, i2) = match c.body {
                    ContactBody::Finger(f) => (
                        hand.joint_inertia(f.base_joint()),
                        hand.joint_inertia(f.distal_joint()),
                    ),
                    ContactBody::Ground => unreachable!("ground has no distal point"),
                };
                inv_mass += j1 * j1 / i1 + j2 * j2 / i2
                    + t_hat[2] * t_hat[2] / hand.total_mass();
            }
            if inv_mass > 1e-12 {
                magnitude = magnitude.min(slip / (inv_mass * dt));
            }
            // Friction on the ball opposes the ball's slip.
            [-magnitude * t_hat[0], -magnitude * t_hat[1], -magnitude * t_hat[2]]
        } else {
            [0.0; 3]
        };

        let force = ContactForce {
            contact: *c,
            normal_force,
            friction,
        };
        let f_ball = force.force_on_ball();
        gen.ball_force[0] += f_ball[0];
        gen.ball_force[1] += f_ball[1];
        gen.ball_force[2] += f_ball[2];
        gen.ball_torque_y += cross(r, f_ball)[1];
        if let (ContactBody::Finger(finger), Some(p)) = (c.body, other) {
            let f_finger = [-f_ball[0], -f_ball[1], -f_ball[2]];
            gen.joint_torques[finger.base_joint()] += dot(p.dq1, f_finger);
            gen.joint_torques[finger.distal_joint()] += dot(p.dq2, f_finger);
            gen.palm_force_z += f_finger[2];
        }
        resolved.push(force);
    }
    (resolved, gen)
}

/// Orthonormal pad frame for a contact normal: `(t1, t2, n)` right-handed,
/// with `t1` horizontal in the manipulation plane whenever possible.
pub fn pad_frame(normal: Vec3) -> (Vec3, Vec3) {
    // t1 = ŷ × n, which degenerates only if n is (anti)parallel to ŷ — a
    // geometry the mount layout cannot produce, but guard anyway.
    let t1_raw = [normal[2], 0.0, -normal[0]];
    let len = norm(t1_raw);
    let t1 = if len > 1e-9 {
        [t1_raw[0] / len, t1_raw[1] / len, t1_raw[2] / len]
    } else {
        [1.0, 0.0, 0.0]
    };
    let t2 = cross(normal, t1);
    (t1, t2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::params::ObjectId;
    use crate::sim::reset;
    use approx::assert_relative_eq;

    fn setup() -> (HandParams, ObjectParams, SimConfig, SimState) {
        let hand = HandParams::default();
        let object = ObjectParams::preset(ObjectId::O1);
        let config = SimConfig::default();
        let state = reset(&hand, &object, &config).unwrap();
        (hand, object, config, state)
    }

    #[test]
    fn resting_pose_has_no_finger_contacts_and_no_ground_contact() {
        let (hand, object, _, state) = setup();
        // Ball exactly touching the ground (zero penetration) and fingers
        // straight down, 60 mm off the plane: nothing reported.
        let contacts = detect_contacts(&state, &hand, &object);
        assert!(contacts.is_empty());
    }

    #[test]
    fn ground_penetration_matches_plane_sphere_oracle() {
        let (hand, object, _, mut state) = setup();
        state.ball_z = object.radius - 0.002;
        let contacts = detect_contacts(&state, &hand, &object);
        assert_eq!(contacts.len(), 1);
        let c = &contacts[0];
        assert_eq!(c.body, ContactBody::Ground);
        assert_relative_eq!(c.penetration, 0.002, epsilon = 1e-15);
        assert_eq!(c.normal, [0.0, 0.0, 1.0]);
        assert_relative_eq!(c.point[0], state.ball_x);
        assert_relative_eq!(c.point[2], 0.0);
    }

    #[test]
    fn capsule_sphere_penetration_matches_segment_oracle() {
        // Put the ball center on the thumb's distal link at a known offset.
        // Oracle: penetration = (r_ball + r_phalanx) - point-segment distance
        // computed here with an independent brute-force scan over the
        // segment.
        let (hand, object, _, mut state) = setup();
        let f = finger_frame(&state, FingerId::Thumb, &hand);
        // 30 mm to the +x side of the segment midpoint.
        state.ball_x = f.knuckle[0] + 0.030;
        state.ball_z = (f.knuckle[2] + f.tip[2]) / 2.0;
        let center = [state.ball_x, 0.0, state.ball_z];
        let mut best = f64::INFINITY;
        for i in 0..=10_000 {
            let s = i as f64 / 10_000.0;
            let p = [
                f.knuckle[0] + s * (f.tip[0] - f.knuckle[0]),
                f.knuckle[1] + s * (f.tip[1] - f.knuckle[1]),
                f.knuckle[2] + s * (f.tip[2] - f.knuckle[2]),
            ];
            best = best.min(norm(sub(center, p)));
        }
        let expected = (object.radius + hand.phalanx_radius) - best;
        assert!(expected > 0.0, "test setup must penetrate");
        let contacts = detect_contacts(&state, &hand, &object);
        let c = contacts
            .iter()
            .find(|c| c.body == ContactBody::Finger(FingerId::Thumb))
            .expect("thumb contact");
        assert_relative_eq!(c.penetration, expected, epsilon = 1e-9);
        assert_relative_eq!(c.normal[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(c.sigma, 0.5, epsilon = 1e-6);
    }

    #[test]
    fn static_penetration_gives_pure_spring_force() {
        // δ = 1 mm at rest with the default 1 N/mm stiffness → exactly 1 N.
        let (hand, object, config, mut state) = setup();
        state.ball_z = object.radius - 0.001;
        let contacts = detect_contacts(&state, &hand, &object);
        let (forces, gen) = contact_forces(&state, &contacts, &hand, &object, &config, 1e-3);
        assert_eq!(forces.len(), 1);
        assert_relative_eq!(forces[0].normal_force, 1.0, epsilon = 1e-12);
        assert_eq!(forces[0].friction, [0.0; 3]);
        assert_relative_eq!(gen.ball_force[2], 1.0, epsilon = 1e-12);
        assert_relative_eq!(gen.ball_torque_y, 0.0);
    }

    #[test]
    fn damping_term_adds_and_subtracts_with_closing_speed() {
        let (hand, object, config, mut state) = setup();
        state.ball_z = object.radius - 0.001;
        state.ball_zd = -0.1; // approaching the ground at 0.1 m/s
        let contacts = detect_contacts(&state, &hand, &object);
        let (forces, _) = contact_forces(&state, &contacts, &hand, &object, &config, 1e-3);
        assert_relative_eq!(
            forces[0].normal_force,
            1.0 + config.contact_damping * 0.1,
            epsilon = 1e-12
        );

        state.ball_zd = 1000.0; // separating fast: spring term overwhelmed
        let contacts = detect_contacts(&state, &hand, &object);
        let (forces, _) = contact_forces(&state, &contacts, &hand, &object, &config, 1e-3);
        assert_eq!(forces[0].normal_force, 0.0, "normal force never adhesive");
    }

    #[test]
    fn friction_opposes_slip_and_respects_cone() {
        let (hand, object, config, mut state) = setup();
        state.ball_z = object.radius - 0.001;
        state.ball_xd = 0.05; // sliding +x over the ground
        let contacts = detect_contacts(&state, &hand, &object);
        let (forces, gen) = contact_forces(&state, &contacts, &hand, &object, &config, 1e-3);
        let f = &forces[0];
        assert!(f.friction[0] < 0.0, "friction opposes +x slip");
        assert_relative_eq!(f.friction[1], 0.0);
        assert_relative_eq!(f.friction[2], 0.0, epsilon = 1e-15);
        let cone = config.friction * f.normal_force;
        assert!(norm(f.friction) <= cone + 1e-12);
        // Sliding +x with no spin: friction at the bottom point must spin the
        // ball forward (positive torque about +y: rolling direction).
        assert!(gen.ball_torque_y > 0.0);
    }

    #[test]
    fn friction_impulse_cap_engages_at_tiny_slip() {
        // At slip speeds far below v_eps·atanh-scale the uncapped law would
        // still produce a force big enough to reverse the slip within one
        // substep; the cap must hold it to exactly the stopping impulse.
        let (hand, object, config, mut state) = setup();
        state.ball_z = object.radius - 0.001; // 1 N normal force
        let slip = 1e-6;
        state.ball_xd = slip;
        let contacts = detect_contacts(&state, &hand, &object);
        let dt = 1e-3;
        let (forces, _) = contact_forces(&state, &contacts, &hand, &object, &config, dt);
        let f = &forces[0];
        // Lever arm of the ground contact is the (penetrated) center height.
        let inv_mass = 1.0 / object.mass
            + (state.ball_z * state.ball_z) / object.inertia();
        let stopping = slip / (inv_mass * dt);
        assert_relative_eq!(norm(f.friction), stopping, max_relative = 1e-9);
        assert!(norm(f.friction) < config.friction * f.normal_force);
    }

    #[test]
    fn finger_contact_reaction_loads_joints_and_palm() {
        let (hand, object, config, mut state) = setup();
        // Drop the palm so the thumb's distal link reaches the ball resting
        // on the ground, and push the ball into it from the side.
        state.palm_z = 0.085;
        let f = finger_frame(&state, FingerId::Thumb, &hand);
        state.ball_x = f.tip[0] + object.radius + hand.phalanx_radius - 0.002;
        state.ball_z = object.radius;
        let contacts = detect_contacts(&state, &hand, &object);
        let c = contacts
            .iter()
            .find(|c| matches!(c.body, ContactBody::Finger(FingerId::Thumb)))
            .expect("thumb contact");
        assert!(c.penetration > 0.0);
        let (forces, gen) = contact_forces(&state, &contacts, &hand, &object, &config, 1e-3);
        let thumb = forces
            .iter()
            .find(|f| f.contact.body == ContactBody::Finger(FingerId::Thumb))
            .unwrap();
        // The ball sits on the +x side of the thumb: it gets pushed further
        // +x, and the reaction bends the thumb back (-x), i.e. negative
        // torque on the base joint whose positive direction flexes toward +x.
        assert!(thumb.force_on_ball()[0] > 0.0);
        assert!(gen.joint_torques[0] < 0.0);
        // Equal and opposite along z as well: whatever z-force the ball sees
        // from the finger, the palm axis sees negated (the ground contact
        // only touches the ball).
        let ball_z_from_finger = thumb.force_on_ball()[2];
        assert_relative_eq!(gen.palm_force_z, -ball_z_from_finger, epsilon = 1e-12);
    }

    #[test]
    fn pad_frame_is_right_handed_orthonormal() {
        let cases = [
            [1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0],
            [-0.6, 0.0, 0.8],
            [0.48, 0.6, 0.64],
        ];
        for n in cases {
            let (t1, t2) = pad_frame(n);
            assert_relative_eq!(norm(t1), 1.0, epsilon = 1e-12);
            assert_relative_eq!(norm(t2), 1.0, epsilon = 1e-12);
            assert_relative_eq!(dot(t1, n), 0.0, epsilon = 1e-12);
            assert_relative_eq!(dot(t2, n), 0.0, epsilon = 1e-12);
            assert_relative_eq!(dot(t1, t2), 0.0, epsilon = 1e-12);
            let rh = cross(t1, t2);
            for k in 0..3 {
                assert_relative_eq!(rh[k], n[k], epsilon = 1e-12);
            }
        }
        // Degenerate guard: normal along ±y falls back to x̂.
        let (t1, _) = pad_frame([0.0, 1.0, 0.0]);
        assert_eq!(t1, [1.0, 0.0, 0.0]);
    }
}
