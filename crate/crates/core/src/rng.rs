//! Seeded Gaussian sampling shared by the randomized SVD and the noise model.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// ChaCha stream keyed by (seed, stream); distinct streams are independent,
/// so per-trial noise does not depend on evaluation order.
pub(crate) fn seeded_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

// Box-Muller: exact, branch-free, and stable across platforms.
pub(crate) fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random();
    let u2: f64 = rng.random();
    let r = libm::sqrt(-2.0 * libm::log(u1.max(f64::MIN_POSITIVE)));
    r * libm::cos(core::f64::consts::TAU * u2)
}

pub(crate) fn gaussian_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| standard_normal(rng)).collect()
}
