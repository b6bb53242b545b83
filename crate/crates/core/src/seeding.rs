//! Independent, reproducible random streams derived from one run seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finaliser.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for stream `stream` at index `index` under `base`.
pub fn derive_seed(base: u64, stream: u64, index: u64) -> u64 {
    mix(mix(mix(base) ^ stream) ^ index)
}

pub fn stream_rng(base: u64, stream: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, stream, index))
}

/// Named streams used by the training loops.
pub mod streams {
    pub const STUDENT_ROLLOUT: u64 = 1;
    pub const TEACHER_ROLLOUT: u64 = 2;
    pub const STUDENT_MINIBATCH: u64 = 3;
    pub const TEACHER_MINIBATCH: u64 = 4;
    pub const SELECTION: u64 = 5;
    pub const EVALUATION: u64 = 6;
    pub const INIT: u64 = 7;
    pub const CRITIC_MINIBATCH: u64 = 8;
}
