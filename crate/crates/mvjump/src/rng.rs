//! Deterministic stream derivation.
//!
//! Every stochastic routine takes a `ChaCha8Rng` (or a seed from which it
//! builds one), so a fixed master seed reproduces every path bit for bit
//! regardless of how work is scheduled. Independent streams (one per Monte
//! Carlo path, one per training epoch) are derived from the master seed and a
//! stream index through a SplitMix64 scramble, which keeps the streams
//! decorrelated even for adjacent indices.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer; bijective on u64.
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// RNG for the sub-stream `index` of the given master seed.
pub fn derive_stream(master_seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix(master_seed ^ splitmix(index)))
}

/// RNG seeded directly from the master seed (index 0 convention).
pub fn master_stream(master_seed: u64) -> ChaCha8Rng {
    derive_stream(master_seed, 0)
}

/// Derived master seed for an independent sub-task (`tag` picks the task).
/// Different tags give decorrelated seed spaces, so a command can hand each
/// of its stages (calibration, training, evaluation) its own stream family.
pub fn subseed(master_seed: u64, tag: u64) -> u64 {
    splitmix(master_seed.wrapping_add(splitmix(!tag)))
}
