//! Seeded randomness shared by the problem generators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Seed for trial `index` under `master`.
///
/// SplitMix64 finalizer over `master` advanced by `index + 1` golden-ratio
/// increments, so adding trials never changes the seeds of earlier ones.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// `len` i.i.d. samples from N(0, std²).
pub fn gaussian_vec<R: Rng + ?Sized>(rng: &mut R, len: usize, std: f64) -> Vec<f64> {
    (0..len).map(|_| std * gaussian(rng)).collect()
}
