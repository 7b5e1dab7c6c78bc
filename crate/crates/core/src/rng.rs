//! Seeded, splittable random streams.
//!
//! A stream is ChaCha8 keyed by the 64-bit seed; independent substreams are
//! selected with ChaCha's stream word, so block `k` of a sampling run gets the
//! same draws whether blocks run sequentially or in parallel.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// Draws per independently seeded sampling block.
pub const BLOCK: usize = 256;

pub fn stream(seed: u64) -> Stream {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Substream `index` of `seed`.
pub fn substream(seed: u64, index: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
