//! Seeded, stream-split random number generators.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator for stream `stream` of the experiment seeded with `seed`.
///
/// Streams are disjoint ChaCha keystreams, so parallel workers indexed by
/// stream produce results that depend only on `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Splits `total` items into `parts` nearly equal, ordered chunk sizes.
pub fn split_counts(total: usize, parts: usize) -> Vec<usize> {
    let parts = parts.max(1);
    let base = total / parts;
    let extra = total % parts;
    (0..parts).map(|i| base + usize::from(i < extra)).collect()
}
