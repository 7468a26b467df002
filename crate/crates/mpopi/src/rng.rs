//! Deterministic, counter-addressed random streams.
//!
//! Every stochastic operation in the library draws from a stream addressed by
//! a master seed plus a tuple of tags (control step, refinement iteration,
//! sample index). Two calls with the same address produce the same bits no
//! matter which thread executes them, so parallel rollouts are reproducible
//! and a sweep gives byte-identical results at any thread count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tags keep unrelated streams apart even when their numeric
/// coordinates coincide.
pub mod stream {
    /// Rollout noise vectors.
    pub const NOISE: u64 = 0x01;
    /// Proposal-update randomness (e.g. multinomial resampling).
    pub const AIS: u64 = 0x02;
    /// Environment initial conditions.
    pub const INIT: u64 = 0x03;
    /// Trial seed derivation inside a sweep.
    pub const TRIAL: u64 = 0x04;
}

/// SplitMix64 finalizer; mixes a 64-bit word into an avalanche-quality hash.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Fold a sequence of tags into a single 64-bit seed.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    let mut state = splitmix64(master);
    for &t in tags {
        state = splitmix64(state ^ splitmix64(t));
    }
    state
}

/// Construct the RNG for a fully addressed substream.
pub fn derive_rng(master: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, tags))
}

/// Stream coordinates for one control step of one episode.
///
/// The controller carries one of these per step; it hands out per-sample and
/// per-iteration RNGs so that rollout k of iteration l is addressed as
/// (master, step, l, k) regardless of scheduling.
#[derive(Debug, Clone, Copy)]
pub struct StepStream {
    pub master: u64,
    pub step: u64,
}

impl StepStream {
    pub fn new(master: u64, step: u64) -> Self {
        Self { master, step }
    }

    /// RNG for the noise vector of sample `k` in refinement iteration `iter`.
    pub fn noise_rng(&self, iter: u64, k: u64) -> ChaCha8Rng {
        derive_rng(self.master, &[stream::NOISE, self.step, iter, k])
    }

    /// RNG for the proposal update of refinement iteration `iter`.
    pub fn ais_rng(&self, iter: u64) -> ChaCha8Rng {
        derive_rng(self.master, &[stream::AIS, self.step, iter])
    }
}
