//! Counter-based, splittable random streams.
//!
//! Every stochastic routine takes an [`RngStreams`] (a root seed) and derives
//! independent ChaCha streams from it by `(purpose, index)`, so results do not
//! depend on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStreams {
    seed: u64,
}

impl RngStreams {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent stream number `index`.
    pub fn stream(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }

    /// Child root for a named sub-computation.
    pub fn fork(&self, purpose: u64) -> RngStreams {
        // splitmix64 finalizer
        let mut z = self.seed ^ purpose.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        RngStreams::new(z ^ (z >> 31))
    }
}
