//! Seeded random streams.
//!
//! Every stochastic routine derives its generator from a `(seed, stream)`
//! pair, so replicate `r` of a resampling run draws the same numbers no
//! matter which worker thread executes it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub fn stream(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
