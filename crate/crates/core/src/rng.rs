//! Seed derivation and counter-based random streams.
//!
//! Every random draw is keyed by `(seed, stream)` so results do not depend on
//! thread count or scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a base seed with a path of integers into a child seed.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(base), |acc, &k| splitmix64(acc ^ splitmix64(k)))
}

/// ChaCha20 generator on an independent stream of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `len` standard normal draws from stream `stream` of `seed`.
pub fn normal_vector(seed: u64, stream: u64, len: usize) -> Vec<f64> {
    let mut rng = stream_rng(seed, stream);
    (0..len).map(|_| StandardNormal.sample(&mut rng)).collect()
}
