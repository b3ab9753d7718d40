//! Deterministic per-task random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent generator for task `index` of a run seeded with `seed`.
///
/// ChaCha is counter based, so streams for different indices never overlap
/// and can be created in any order or on any thread.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
