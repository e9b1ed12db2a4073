//! Reproducible random streams.
//!
//! Every randomized computation is keyed by `(seed, index)`: trial `i` of a
//! Monte Carlo run always sees the same ChaCha8 stream regardless of how
//! trials are scheduled across threads.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Default seed for bare invocations.
pub const DEFAULT_SEED: u64 = 0xD1617;

/// Independent substream `index` of the generator keyed by `seed`.
pub fn substream(seed: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Uniform draw from the open interval (0, 1) with 53 random bits.
#[inline]
pub fn open01<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}
