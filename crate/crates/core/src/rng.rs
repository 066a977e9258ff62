//! Seedable random stream shared by the samplers, the Monte Carlo engine and
//! the racer's duration schedule.
//!
//! Backed by ChaCha8. A stream is identified by `(seed, stream)`; two streams
//! with the same pair produce the same variates on every platform.

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Deterministic random stream.
#[derive(Clone, Debug)]
pub struct SimRng {
    inner: ChaCha8Rng,
    seed: u64,
    stream: u64,
}

impl SimRng {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    /// Independent stream `stream` under the same base seed.
    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self {
            inner,
            seed,
            stream,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Uniform variate strictly inside (0, 1).
    #[inline]
    pub fn open01(&mut self) -> f64 {
        self.inner.sample(Open01)
    }
}

/// Child seed for the `index`-th point of a sweep (SplitMix64 finalizer over
/// the pair). The mapping is part of the output format: changing it changes
/// every recorded Monte Carlo column.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    mix(base.wrapping_add(mix(index.wrapping_add(0x9e37_79b9_7f4a_7c15))))
}
