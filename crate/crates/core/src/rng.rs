//! Counter-based random streams.
//!
//! Every independent unit of work (a replication, a bootstrap replicate, a
//! fold plan) draws from its own ChaCha stream selected by `(domain, index)`,
//! so results do not depend on how work is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub const DOMAIN_SIMULATION: u64 = 1;
pub const DOMAIN_BOOTSTRAP: u64 = 2;
pub const DOMAIN_FOLDS: u64 = 3;
pub const DOMAIN_CV_LAMBDA: u64 = 4;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent generator for work unit `index` of `domain` under `seed`.
pub fn stream(seed: u64, domain: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(domain)));
    rng.set_stream(index);
    rng
}

/// Derives a 64-bit seed for a nested consumer (e.g. the fold plan inside a
/// bootstrap replicate).
pub fn derive_seed(seed: u64, domain: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed ^ splitmix64(domain)) ^ index)
}
