//! Seeded random streams.
//!
//! All randomness comes from ChaCha8 (`rand_chacha::ChaCha8Rng`). A 64-bit
//! seed is expanded with `SeedableRng::seed_from_u64` and independent
//! consumers draw from distinct ChaCha stream ids, so results are identical
//! across platforms and thread counts.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn stream(seed: u64, stream_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}
