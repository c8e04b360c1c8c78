use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Deterministic RNG stream used throughout the crate.
pub type StreamRng = ChaCha8Rng;

/// SplitMix64 finalizer over `(base, stream)`; gives decorrelated child seeds.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_from_seed(seed: u64) -> StreamRng {
    StreamRng::seed_from_u64(seed)
}
