//! Reproducible random streams.
//!
//! Every Monte Carlo routine takes a `seed` and derives one independent
//! stream per trial. ChaCha is a counter-based generator: the stream id is
//! part of the cipher nonce, so trial `i` sees the same numbers no matter
//! which worker runs it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used throughout the crate.
pub type StreamRng = ChaCha8Rng;

/// Identifier recorded in run reports.
pub const RNG_ALGORITHM: &str = "ChaCha8 (rand_chacha 0.9); key = seed_from_u64(seed), stream = substream index";

/// Independent stream `stream` of the generator keyed by `seed`.
pub fn substream(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream index for trial `trial` of experiment block `block`, so several
/// batches inside one run never share numbers.
pub fn block_stream(block: u32, trial: u64) -> u64 {
    ((block as u64) << 40) | (trial & ((1u64 << 40) - 1))
}
