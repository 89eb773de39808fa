//! Experiment harness for the in-hand rotation testbed.
//!
//! The core crate supplies the deterministic pieces — simulation, PPO,
//! curricula, metrics. This crate turns them into experiments:
//!
//! - [`config`] — layered configuration (defaults → TOML file → flags) and
//!   the fully resolved `config.resolved.toml` echo, which is itself a valid
//!   config file reproducing the run.
//! - [`trial`] — one seeded training trial: 1,000-step episodes, one PPO
//!   update per episode, one metric row per episode streamed to disk.
//! - [`experiment`] — the bounded worker pool over trials plus merged rows,
//!   `summary.json`, and `plot_points.csv`.
//! - [`summarize`] — rebuilding those outputs from a run directory without
//!   re-simulating.
//!
//! For a fixed configuration every output byte is deterministic except the
//! `wall_clock_seconds` field of the per-trial records: trial `i` always
//! seeds its RNG streams with `base_seed + i`, regardless of curriculum,
//! tactile condition, or worker count.

pub mod config;
pub mod experiment;
pub mod summarize;
pub mod trial;
