//! Seedable, splittable PRNG used for every random draw in the simulator.
//!
//! Backed by ChaCha8 (`rand_chacha`), whose output stream is fixed by its
//! published algorithm and therefore identical on every platform. Child
//! streams are derived by selecting a ChaCha stream id, so independent
//! consumers (scenario generation, velocity noise, random baselines) never
//! share state.

use rand::{Error, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimRng {
    inner: ChaCha8Rng,
    seed: u64,
}

impl SimRng {
    pub fn from_seed_u64(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
            seed,
        }
    }

    /// A fresh generator for the `stream`-th child of `seed`.
    ///
    /// Does not depend on how much of the parent stream has been consumed.
    pub fn stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { inner, seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

impl RngCore for SimRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), Error> {
        self.inner.try_fill_bytes(dest)
    }
}

/// Well-known stream ids carved out of a run seed.
pub mod streams {
    /// Scenario `k` is generated from stream `SCENARIO_BASE + k`.
    pub const SCENARIO_BASE: u64 = 0;
    /// Per-episode noise and random-policy streams live above this offset.
    pub const EPISODE_BASE: u64 = 1 << 40;
    pub const POLICY_BASE: u64 = 1 << 41;
}
