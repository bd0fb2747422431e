//! Counter-keyed random streams.
//!
//! Every stochastic step draws from a ChaCha stream whose seed is a hash of
//! the run seed and a tuple of counters (round, task, draw index, ...). Two
//! computations with the same key see the same numbers no matter which
//! worker thread runs them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a seed and a list of counters into one 64-bit key.
pub fn mix_key(seed: u64, counters: &[u64]) -> u64 {
    counters
        .iter()
        .fold(splitmix64(seed), |acc, &c| splitmix64(acc ^ splitmix64(c)))
}

/// A stream keyed by `(seed, counters...)`.
pub fn keyed(seed: u64, counters: &[u64]) -> Rng {
    Rng::seed_from_u64(mix_key(seed, counters))
}
