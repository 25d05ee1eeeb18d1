//! Seed derivation. One master seed fans out to an independent generator
//! per randomized step, so results never depend on thread scheduling or on
//! how many draws another step consumed.
//!
//! Streams: candidate sampling uses `(master, CANDIDATES, k * 4096 + q)`
//! with route point `k` and sample number `q` packed into one index,
//! slot-position sampling uses `(master, SLOT_POINTS, linear slot index)`,
//! fade draws use `(master, FADING, linear slot index)`, and cross-check
//! sampling uses `(master, ORACLE, 0)`. The linear slot index counts slots
//! in trajectory order starting at 0.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const CANDIDATES: u64 = 1;
pub const SLOT_POINTS: u64 = 2;
pub const FADING: u64 = 3;
pub const ORACLE: u64 = 4;

/// SplitMix64 finalizer; decorrelates consecutive inputs.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Collapses `(master, stream, index)` into one well-mixed 64-bit seed.
pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    mix(mix(mix(master).wrapping_add(stream)).wrapping_add(index))
}

/// Deterministic generator for one randomized step.
pub fn rng_for(master: u64, stream: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, stream, index))
}
