//! Seeded randomness.
//!
//! All sampling uses ChaCha8 seeded through `seed_from_u64`, so a given seed
//! yields the same stream on every platform. Independent streams are derived
//! by mixing a tag into the seed with SplitMix64.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A stream for `(seed, tag)` that does not overlap the plain `seed` stream.
pub fn substream(seed: u64, tag: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed ^ splitmix64(tag.wrapping_add(0x9e37_79b9_7f4a_7c15)))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
