//! Seed plumbing. Every stochastic routine takes an explicit `u64` seed and
//! derives independent ChaCha streams from it, so results never depend on
//! thread count or scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// SplitMix64 finalizer; decorrelates nearby seeds.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// Independent stream `index` of the family identified by `seed`.
pub fn substream(seed: u64, index: u64) -> SimRng {
    let mut rng = SimRng::seed_from_u64(mix(seed));
    rng.set_stream(index);
    rng
}

/// Derive a child seed for a named sub-task.
pub fn derive(seed: u64, tag: u64) -> u64 {
    mix(seed ^ mix(tag))
}
