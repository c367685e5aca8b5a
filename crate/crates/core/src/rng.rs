//! Reproducible per-replica random streams.
//!
//! A stream is identified by `(base_seed, stream_id)`. The pair is folded
//! into a single 64-bit seed with a splitmix64 finalizer, which then seeds a
//! ChaCha8 generator. Replicas map to stream ids, so results do not depend on
//! how replicas are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Generator used by every simulation routine.
pub type SimRng = ChaCha8Rng;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// splitmix64 output function.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub base_seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(base_seed: u64, stream_id: u64) -> Self {
        Self { base_seed, stream_id }
    }

    /// The 64-bit seed this stream hands to the generator.
    pub fn seed(&self) -> u64 {
        mix64(self.base_seed.wrapping_add(GOLDEN) ^ mix64(self.stream_id.wrapping_mul(GOLDEN).wrapping_add(1)))
    }

    pub fn rng(&self) -> SimRng {
        SimRng::seed_from_u64(self.seed())
    }

    /// Stream for replica `id` nested under this one.
    pub fn replica(&self, id: u64) -> RngStream {
        RngStream::new(self.seed(), id)
    }

    /// Independent named sub-stream, used to separate e.g. the environment
    /// clock from the jump randomness of a single run.
    pub fn child(&self, tag: u64) -> RngStream {
        RngStream::new(mix64(self.seed() ^ mix64(tag.wrapping_add(0x5151))), tag)
    }
}

/// Draw an index from a probability vector.
pub fn sample_index(probs: &[f64], rng: &mut SimRng) -> usize {
    let mut u = rng.random::<f64>();
    for (i, p) in probs.iter().enumerate() {
        if u < *p {
            return i;
        }
        u -= p;
    }
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(0)
}
