//! Seeded random-number streams.
//!
//! Every stochastic component of a trial (policy initialization, action
//! sampling, minibatch shuffling) draws from its own ChaCha stream derived
//! from the trial seed. ChaCha is counter-based, so streams with the same
//! seed but different stream ids are statistically independent, and advancing
//! one never perturbs another. This is what makes runs reproducible even when
//! one component changes how many numbers it draws.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream id for policy weight initialization.
pub const STREAM_POLICY_INIT: u64 = 0;
/// Stream id for action sampling during rollouts.
pub const STREAM_ACTION: u64 = 1;
/// Stream id for minibatch shuffling during PPO updates.
pub const STREAM_SHUFFLE: u64 = 2;

/// Returns the RNG for `stream` under the given trial seed.
///
/// The same `(seed, stream)` pair always yields the same sequence.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
