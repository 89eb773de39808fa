//! Core library for a planar in-hand manipulation testbed: a three-fingered
//! hand hanging over a ball must lift it off the ground and spin it against
//! gravity, learning the skill from scratch with PPO.
//!
//! The crate is organized around four concerns:
//!
//! - [`sim`] — deterministic rigid-body simulation of the hand and ball
//!   (penalty contacts, servo-driven joints, semi-implicit Euler integration)
//!   plus observation assembly and the optional fingertip force sensing.
//! - [`ppo`] — a self-contained PPO implementation: Gaussian MLP actor-critic
//!   in plain `f64`, manual reverse-mode gradients, GAE, Adam, and a binary
//!   checkpoint format.
//! - [`curriculum`] — reward definition, the five two-phase reward curricula,
//!   and the piecewise-linear learning-rate schedule tied to them.
//! - [`metrics`] — per-episode metrics, cross-trial aggregation, and the CSV /
//!   JSON export formats consumed by the experiment harness.
//!
//! Everything here is deterministic given a seed: no global RNG, no wall-clock
//! input, no hash-map iteration order leaking into numerics. The experiment
//! harness in the companion CLI crate builds directly on these modules.

pub mod curriculum;
pub mod metrics;
pub mod ppo;
pub mod rng;
pub mod sim;
