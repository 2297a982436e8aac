//! Random streams.
//!
//! Every chain and every oracle worker owns a ChaCha8 generator keyed by a
//! 64-bit seed and selected by a 64-bit stream id. ChaCha is counter based,
//! so the output for a given `(seed, stream)` pair is identical on every
//! platform and independent of how work is split across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type ChainRng = ChaCha8Rng;

/// Generator for stream `stream` under master seed `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChainRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
