//! Counter-based random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream keyed by
//! `(seed, lane)` and positioned with `set_stream(index)`. A lane separates
//! unrelated purposes (for example the grid point of a Monte-Carlo sweep) and
//! the index is usually the replication number, so results never depend on how
//! work is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Key for a family of independent streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub seed: u64,
    pub lane: u64,
}

impl StreamKey {
    pub fn new(seed: u64) -> Self {
        StreamKey { seed, lane: 0 }
    }

    /// Derives a sub-lane. Lanes are mixed with splitmix64 so nested
    /// derivations with different tags never collide in practice.
    pub fn lane(self, tag: u64) -> Self {
        StreamKey {
            seed: self.seed,
            lane: splitmix64(self.lane ^ splitmix64(tag.wrapping_add(0x632b_e59b_d9b4_e019))),
        }
    }

    pub fn rng(&self, index: u64) -> StreamRng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&self.lane.to_le_bytes());
        key[16..24].copy_from_slice(b"trajrisk");
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(index);
        rng
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stable 64-bit tag for a string label, used to name lanes.
pub fn tag(label: &str) -> u64 {
    label
        .bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}
