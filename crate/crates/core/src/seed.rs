//! Deterministic seed derivation.
//!
//! Everything random in this crate is driven by `ChaCha8Rng` seeded through these
//! helpers, so a run is reproducible from a single base seed across platforms.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer; good avalanche for cheap seed mixing.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from a base seed, a role tag, and an index.
///
/// The tag keeps independent consumers (e.g. the surrogate fit and the acquisition
/// maximizer) on disjoint streams even when they share a base seed and index.
pub fn derive(base: u64, tag: &str, index: u64) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in tag.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    mix(base ^ mix(h ^ mix(index)))
}

/// Seeded RNG used throughout the crate.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
