//! Stepping, reset, tactile readout, and observation assembly.
//!
//! One control step holds an action constant for `control_dt` and integrates
//! the mechanics through `substeps` semi-implicit Euler substeps: forces are
//! evaluated at the current state, velocities are updated first (with all
//! linear-in-velocity damping terms folded in implicitly for stability), and
//! positions then advance with the *new* velocities. Joint and palm travel
//! limits are hard stops: positions clamp and outward velocity zeroes.

use serde::{Deserialize, Serialize};

use super::contact::{contact_forces, detect_contacts, pad_frame, ContactBody, ContactForce};
use super::kinematics::dot;
use super::params::{HandParams, ObjectParams, SimConfig, TactileMode};
use super::state::{ActionCommand, FingerId, SimState};
use super::SimError;

/// Per-fingertip contact force reading: `[f_t1, f_t2, f_n]` per finger in
/// finger order. Tangential components are the force the ball exerts on the
/// pad expressed in the pad frame; `f_n` is the normal force magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TactileFrame {
    /// Sensor mode the frame was produced under.
    pub mode: TactileMode,
    /// Readings indexed by finger (thumb, index, middle).
    pub forces: [[f64; 3]; 3],
}

impl TactileFrame {
    /// An all-zero frame, the reading before the first step of an episode.
    pub fn zero(mode: TactileMode) -> Self {
        TactileFrame {
            mode,
            forces: [[0.0; 3]; 3],
        }
    }
}

/// Builds the tactile readout from resolved contact forces.
fn tactile_from_forces(forces: &[ContactForce], mode: TactileMode) -> TactileFrame {
    let mut frame = TactileFrame::zero(mode);
    for f in forces {
        if let ContactBody::Finger(finger) = f.contact.body {
            if f.normal_force > 0.0 {
                let (t1, t2) = pad_frame(f.contact.normal);
                // Reaction on the pad: opposite of what the ball receives.
                let on_ball = f.force_on_ball();
                let on_pad = [-on_ball[0], -on_ball[1], -on_ball[2]];
                frame.forces[finger as usize] = [
                    dot(on_pad, t1),
                    dot(on_pad, t2),
                    f.normal_force,
                ];
            }
        }
    }
    frame
}

/// Initial state: palm at its initial height, fingers straight down at zero
/// velocity, ball resting on the ground at the origin with zero spin.
///
/// Validates all parameter sets; an invalid configuration is rejected here
/// rather than producing garbage trajectories later.
pub fn reset(
    hand: &HandParams,
    object: &ObjectParams,
    config: &SimConfig,
) -> Result<SimState, SimError> {
    hand.validate()?;
    object.validate()?;
    config.validate()?;
    Ok(SimState {
        q: [0.0; 6],
        qd: [0.0; 6],
        palm_z: hand.initial_palm_height,
        palm_zd: 0.0,
        ball_x: 0.0,
        ball_z: object.radius,
        ball_theta: 0.0,
        ball_xd: 0.0,
        ball_zd: 0.0,
        ball_thetad: 0.0,
    })
}

/// Advances one control step and returns the new state plus the tactile
/// reading at its end.
///
/// Servos track the action's position targets with PD control; the palm
/// actuator carries a gravity feedforward for the hand's own weight and is
/// force-limited. Ball dynamics follow the planar model: gravity and contact
/// along z, keeper spring and contact along x, contact torque about y, each
/// axis with its own viscous damping.
pub fn step(
    state: &SimState,
    action: &ActionCommand,
    hand: &HandParams,
    object: &ObjectParams,
    config: &SimConfig,
) -> Result<(SimState, TactileFrame), SimError> {
    let dt = config.substep_dt();
    let mut s = state.clone();
    let m_hand = hand.total_mass();
    let m_ball = object.mass;
    let inertia = object.inertia();

    for substep in 0..config.substeps {
        let contacts = detect_contacts(&s, hand, object);
        let (_, gen) = contact_forces(&s, &contacts, hand, object, config, dt);

        // Joints: v' = (v + dt·(k_p·e + τ_c)/I) / (1 + dt·(k_d + b)/I).
        // The derivative and passive-damping terms are evaluated implicitly,
        // which keeps stiff damping stable at this substep size.
        for j in 0..6 {
            let target = action.joint_target(j, hand);
            let inertia_j = hand.joint_inertia(j);
            let torque = hand.servo_kp * (target - s.q[j]) + gen.joint_torques[j];
            let denom = 1.0 + dt * (hand.servo_kd + hand.joint_damping) / inertia_j;
            s.qd[j] = (s.qd[j] + dt * torque / inertia_j) / denom;
        }

        // Palm axis: PD servo with gravity feedforward, clamped to the
        // actuator's force limit, plus contact reactions and weight.
        let palm_target = action.palm_target(hand);
        let servo = (hand.palm_kp * (palm_target - s.palm_z) - hand.palm_kd * s.palm_zd
            + m_hand * config.gravity)
            .clamp(-hand.palm_force_limit, hand.palm_force_limit);
        let palm_acc = (servo - m_hand * config.gravity + gen.palm_force_z) / m_hand;
        s.palm_zd += dt * palm_acc;

        // Ball: m·ẍ = -k_x·x - b_x·ẋ + Σf_x ; m·z̈ = -m·g - b_z·ż + Σf_z ;
        // I·θ̈ = -b_θ·θ̇ + Στ_y, with each damping term implicit.
        let acc_x = (-object.stiffness_x * s.ball_x + gen.ball_force[0]) / m_ball;
        s.ball_xd = (s.ball_xd + dt * acc_x) / (1.0 + dt * object.damping_x / m_ball);
        let acc_z = -config.gravity + gen.ball_force[2] / m_ball;
        s.ball_zd = (s.ball_zd + dt * acc_z) / (1.0 + dt * object.damping_z / m_ball);
        let acc_th = gen.ball_torque_y / inertia;
        s.ball_thetad = (s.ball_thetad + dt * acc_th) / (1.0 + dt * object.damping_rot / inertia);

        // Positions advance with the updated velocities.
        for j in 0..6 {
            s.q[j] += dt * s.qd[j];
        }
        s.palm_z += dt * s.palm_zd;
        s.ball_x += dt * s.ball_xd;
        s.ball_z += dt * s.ball_zd;
        s.ball_theta += dt * s.ball_thetad;

        // Hard stops: clamp and kill outward velocity.
        for j in 0..6 {
            let (lo, hi) = hand.joint_range(j);
            if s.q[j] < lo {
                s.q[j] = lo;
                if s.qd[j] < 0.0 {
                    s.qd[j] = 0.0;
                }
            } else if s.q[j] > hi {
                s.q[j] = hi;
                if s.qd[j] > 0.0 {
                    s.qd[j] = 0.0;
                }
            }
        }
        let (palm_lo, palm_hi) = (hand.min_palm_height(), hand.initial_palm_height);
        if s.palm_z < palm_lo {
            s.palm_z = palm_lo;
            if s.palm_zd < 0.0 {
                s.palm_zd = 0.0;
            }
        } else if s.palm_z > palm_hi {
            s.palm_z = palm_hi;
            if s.palm_zd > 0.0 {
                s.palm_zd = 0.0;
            }
        }

        if !s.is_finite() {
            return Err(SimError::Diverged { substep });
        }
    }

    // Tactile reading at the post-step state.
    let contacts = detect_contacts(&s, hand, object);
    let (forces, _) = contact_forces(&s, &contacts, hand, object, config, dt);
    let tactile = tactile_from_forces(&forces, config.tactile_mode);
    Ok((s, tactile))
}

/// Assembles the policy observation.
///
/// Layout: `[q(6), q̇(6), palm_z, palm_ż]`, and in force-sensing mode nine
/// more values, `[f_t1, f_t2, f_n]` for thumb, index, middle. The ball state
/// is deliberately absent: the task is learned from proprioception and (at
/// most) touch.
pub fn observe(state: &SimState, tactile: &TactileFrame, mode: TactileMode) -> Vec<f64> {
    let mut obs = Vec::with_capacity(mode.obs_dim());
    obs.extend_from_slice(&state.q);
    obs.extend_from_slice(&state.qd);
    obs.push(state.palm_z);
    obs.push(state.palm_zd);
    if mode == TactileMode::Force3D {
        for finger in FingerId::ALL {
            obs.extend_from_slice(&tactile.forces[finger as usize]);
        }
    }
    debug_assert_eq!(obs.len(), mode.obs_dim());
    obs
}

/// Total mechanical energy of the model: kinetic terms of every degree of
/// freedom, the ball keeper spring, the penalty-contact springs, and the
/// gravitational potential of palm and ball.
///
/// With servo gains and gravity both zero this quantity can only decrease
/// along a trajectory — the passive model is dissipative. Exposed as a
/// diagnostic; the test suite leans on it.
pub fn mechanical_energy(
    state: &SimState,
    hand: &HandParams,
    object: &ObjectParams,
    config: &SimConfig,
) -> f64 {
    let mut e = 0.0;
    for j in 0..6 {
        e += 0.5 * hand.joint_inertia(j) * state.qd[j] * state.qd[j];
    }
    e += 0.5 * hand.total_mass() * state.palm_zd * state.palm_zd;
    e += 0.5 * object.mass * (state.ball_xd * state.ball_xd + state.ball_zd * state.ball_zd);
    e += 0.5 * object.inertia() * state.ball_thetad * state.ball_thetad;
    e += 0.5 * object.stiffness_x * state.ball_x * state.ball_x;
    for c in detect_contacts(state, hand, object) {
        e += 0.5 * config.contact_stiffness * c.penetration * c.penetration;
    }
    e += config.gravity * (hand.total_mass() * state.palm_z + object.mass * state.ball_z);
    e
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::params::ObjectId;
    use approx::assert_relative_eq;

    fn setup() -> (HandParams, ObjectParams, SimConfig, SimState) {
        let hand = HandParams::default();
        let object = ObjectParams::preset(ObjectId::O1);
        let config = SimConfig::default();
        let state = reset(&hand, &object, &config).unwrap();
        (hand, object, config, state)
    }

    #[test]
    fn reset_validates_parameters() {
        let (hand, object, config, state) = setup();
        assert_eq!(state.ball_z, object.radius);
        assert_eq!(state.palm_z, hand.initial_palm_height);
        let mut bad = object.clone();
        bad.mass = 0.0;
        assert!(matches!(
            reset(&hand, &bad, &config),
            Err(SimError::InvalidParameter { name: "mass", .. })
        ));
    }

    #[test]
    fn step_is_deterministic() {
        let (hand, object, config, state) = setup();
        let action = ActionCommand::new([0.3, -0.4, 0.1, -0.8, -0.2, 0.5, -0.5]);
        let mut a = state.clone();
        let mut b = state.clone();
        for _ in 0..50 {
            a = step(&a, &action, &hand, &object, &config).unwrap().0;
            b = step(&b, &action, &hand, &object, &config).unwrap().0;
        }
        assert_eq!(a, b, "identical inputs must give bit-identical states");
    }

    #[test]
    fn joints_respect_limits_under_saturating_commands() {
        let (hand, object, config, mut state) = setup();
        let slam = ActionCommand::new([1.0, -1.0, 1.0, -1.0, 1.0, -1.0, -1.0]);
        for _ in 0..400 {
            state = step(&state, &slam, &hand, &object, &config).unwrap().0;
            for j in 0..6 {
                let (lo, hi) = hand.joint_range(j);
                assert!(state.q[j] >= lo && state.q[j] <= hi, "joint {j} out of range");
            }
            assert!(state.palm_z >= hand.min_palm_height() - 1e-12);
            assert!(state.palm_z <= hand.initial_palm_height + 1e-12);
        }
    }

    #[test]
    fn servo_tracks_joint_targets() {
        let (hand, object, config, mut state) = setup();
        let action = ActionCommand::new([0.5, -0.5, -0.5, -0.25, 0.25, -0.75, 1.0]);
        for _ in 0..200 {
            state = step(&state, &action, &hand, &object, &config).unwrap().0;
        }
        for j in 0..6 {
            let target = action.joint_target(j, &hand);
            assert_relative_eq!(state.q[j], target, epsilon = 2e-3);
        }
    }

    #[test]
    fn palm_servo_holds_and_tracks_height() {
        let (hand, object, config, mut state) = setup();
        // Hold: the gravity feedforward keeps the palm at its target.
        let hold = ActionCommand::hold();
        for _ in 0..100 {
            state = step(&state, &hold, &hand, &object, &config).unwrap().0;
        }
        assert_relative_eq!(state.palm_z, hand.initial_palm_height, epsilon = 1e-4);
        // Track: command the palm halfway down.
        let descend = ActionCommand::new([0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
        for _ in 0..300 {
            state = step(&state, &descend, &hand, &object, &config).unwrap().0;
        }
        assert_relative_eq!(state.palm_z, descend.palm_target(&hand), epsilon = 1e-3);
    }

    #[test]
    fn ball_settles_to_static_equilibrium_penetration() {
        // The ball dropped onto the ground must come to rest with the
        // penalty spring carrying its weight: δ* = m·g / k_c.
        let (hand, object, config, mut state) = setup();
        let hold = ActionCommand::hold();
        for _ in 0..100 {
            state = step(&state, &hold, &hand, &object, &config).unwrap().0;
        }
        let expected = object.mass * config.gravity / config.contact_stiffness;
        let measured = object.radius - state.ball_z;
        assert_relative_eq!(measured, expected, max_relative = 0.05);
        assert!(state.ball_zd.abs() < 1e-6);
    }

    #[test]
    fn free_fall_matches_damped_closed_form() {
        // Ball alone in the air: m·ż̇ = -m·g - b·ż has the closed form
        //   v(t) = -v_T·(1 - e^(-t/τ)),  z(t) = z0 - v_T·t + v_T·τ·(1 - e^(-t/τ))
        // with v_T = m·g/b and τ = m/b. Fingers hold the reset pose and
        // never enter the ball's path.
        let (hand, object, config, mut state) = setup();
        state.ball_z = 0.2;
        let hold = ActionCommand::hold();
        for _ in 0..10 {
            state = step(&state, &hold, &hand, &object, &config).unwrap().0;
        }
        let t = 0.1;
        let tau = object.mass / object.damping_z;
        let v_t = object.mass * config.gravity / object.damping_z;
        let expected = 0.2 - v_t * t + v_t * tau * (1.0 - (-t / tau).exp());
        assert_relative_eq!(state.ball_z, expected, max_relative = 0.01);
    }

    #[test]
    fn undamped_free_fall_matches_ballistic_oracle() {
        let (hand, mut object, config, _) = setup();
        object.damping_z = 0.0;
        let mut state = reset(&hand, &object, &config).unwrap();
        state.ball_z = 0.2;
        let hold = ActionCommand::hold();
        for _ in 0..10 {
            state = step(&state, &hold, &hand, &object, &config).unwrap().0;
        }
        // z = z0 - g·t²/2 at t = 0.1 s.
        let expected = 0.2 - 0.5 * config.gravity * 0.1 * 0.1;
        assert_relative_eq!(state.ball_z, expected, max_relative = 0.01);
        assert_relative_eq!(expected, 0.15095, max_relative = 1e-12);
    }

    #[test]
    fn passive_model_dissipates_energy() {
        // Zero gains, zero gravity, energetic initial condition: total
        // mechanical energy must never increase, sampled at control steps.
        let (mut hand, object, mut config, _) = setup();
        hand.servo_kp = 0.0;
        hand.servo_kd = 0.0;
        hand.palm_kp = 0.0;
        hand.palm_kd = 0.0;
        config.gravity = 0.0;
        let mut state = reset(&hand, &object, &config).unwrap();
        state.qd = [3.0, -4.0, 2.0, 5.0, -3.0, -2.0];
        state.ball_x = 0.02;
        state.ball_xd = -0.5;
        state.ball_zd = 0.4;
        state.ball_thetad = 20.0;
        state.palm_zd = -0.3;
        let action = ActionCommand::hold(); // irrelevant at zero gains
        let mut energy = mechanical_energy(&state, &hand, &object, &config);
        for _ in 0..300 {
            state = step(&state, &action, &hand, &object, &config).unwrap().0;
            let next = mechanical_energy(&state, &hand, &object, &config);
            assert!(
                next <= energy * (1.0 + 1e-9) + 1e-12,
                "energy increased: {energy} -> {next}"
            );
            energy = next;
        }
    }

    #[test]
    fn observation_layout_and_modes() {
        let (hand, object, mut config, state) = setup();
        let tactile = TactileFrame {
            mode: TactileMode::Force3D,
            forces: [[1.0, 2.0, 3.0], [4.0, 5.0, 6.0], [7.0, 8.0, 9.0]],
        };
        let obs = observe(&state, &tactile, TactileMode::NoTactile);
        assert_eq!(obs.len(), 14);
        assert_eq!(&obs[0..6], &state.q);
        assert_eq!(&obs[6..12], &state.qd);
        assert_eq!(obs[12], state.palm_z);
        assert_eq!(obs[13], state.palm_zd);
        let obs = observe(&state, &tactile, TactileMode::Force3D);
        assert_eq!(obs.len(), 23);
        assert_eq!(&obs[14..23], &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0]);

        // A full step in force3d mode reports a zero frame while nothing
        // touches the ball.
        config.tactile_mode = TactileMode::Force3D;
        let (_, frame) = step(
            &state,
            &ActionCommand::hold(),
            &hand,
            &object,
            &config,
        )
        .unwrap();
        assert_eq!(frame.forces, [[0.0; 3]; 3]);
    }

    #[test]
    fn grasp_produces_tactile_readings_with_positive_normal_component() {
        // Drive the palm down and curl all fingers hard; sometime during the
        // squeeze at least one pad must register force, and every reported
        // f_n must be non-negative.
        let (hand, object, mut config, mut state) = setup();
        config.tactile_mode = TactileMode::Force3D;
        let squeeze = ActionCommand::new([1.0, -1.0, 1.0, -1.0, 1.0, -1.0, -1.0]);
        let mut saw_contact = false;
        for _ in 0..300 {
            let (next, tactile) = step(&state, &squeeze, &hand, &object, &config).unwrap();
            state = next;
            for f in 0..3 {
                let [_, _, fnorm] = tactile.forces[f];
                assert!(fnorm >= 0.0);
                if fnorm > 0.0 {
                    saw_contact = true;
                }
            }
        }
        assert!(saw_contact, "squeezing the workspace must touch the ball");
    }

    #[test]
    fn divergence_is_reported_not_propagated() {
        let (hand, object, config, mut state) = setup();
        state.ball_z = f64::INFINITY;
        let err = step(&state, &ActionCommand::hold(), &hand, &object, &config).unwrap_err();
        assert!(matches!(err, SimError::Diverged { .. }));
    }
}
