//! Counter-based random streams: every consumer derives its generator from
//! `(seed, tag, counters...)`, so results do not depend on call order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn mix(seed: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(seed), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn stream(seed: u64, parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(seed, parts))
}

pub mod tags {
    pub const SCENE: u64 = 0x5CE4E;
    pub const DIFFICULTY: u64 = 0xD1FF;
    pub const BATCH: u64 = 0xBA7C4;
    pub const ROLLOUT: u64 = 0x2011;
    pub const CURATE: u64 = 0xC0247E;
    pub const EVAL_SET: u64 = 0xE7A1;
    pub const TRAIN_SET: u64 = 0x7241;
}
