//! Seeded random streams.
//!
//! Every stochastic operation takes `&mut SimRng` explicitly. ChaCha8 is a
//! counter-based generator, so a `(seed, stream)` pair fully determines the
//! sequence on every platform.

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng as SimRng;

pub fn seeded(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// Independent stream `stream` derived from `seed`.
pub fn stream(seed: u64, stream: u64) -> SimRng {
    let mut rng = SimRng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
