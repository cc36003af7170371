//! Deterministic RNG stream derivation.
//!
//! Every stochastic operation takes an explicit root seed. Sub-streams (per
//! Monte Carlo draw, per replication, per parameter point) are derived by
//! mixing the root seed with integer tags, so results are bit-identical
//! regardless of evaluation order or worker count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer; good avalanche for seed mixing.
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a root seed with a sequence of tags into a derived seed.
pub fn derive(root: u64, tags: &[u64]) -> u64 {
    let mut state = splitmix(root ^ 0x6a09_e667_f3bc_c908);
    for &t in tags {
        state = splitmix(state ^ splitmix(t));
    }
    state
}

/// Stable hash of a parameter point's bit pattern, for per-theta streams.
pub fn theta_tag(theta: &[f64]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &x in theta {
        h ^= x.to_bits();
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
        h = splitmix(h);
    }
    h
}

/// A seeded generator for the given derived stream.
pub fn rng(root: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(root, tags))
}
