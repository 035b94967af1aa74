//! Seedable, splittable random streams.
//!
//! Every independent unit of stochastic work (a phase point, a bootstrap
//! resample, a scan point) draws from its own ChaCha stream selected by
//! `(seed, stream index)`, so results do not depend on evaluation order.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// Generator for substream `stream` of `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A derived seed for nested stochastic work (e.g. the Monte Carlo run at
/// scan point `index` of a scenario seeded with `seed`).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    substream(seed, index).next_u64()
}
