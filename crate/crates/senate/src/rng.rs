//! Deterministic randomness plumbing.
//!
//! Every random decision in the simulator flows through a [`Prng`] seeded
//! from the scenario seed. Sub-streams (per episode, per trial, per phase)
//! are derived by mixing the parent seed with a stream index, so adding a
//! draw to one phase never shifts the draws of another.

use rand::SeedableRng;

/// The one generator used everywhere: small, fast, reproducible.
pub type Prng = rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer; decorrelates nearby seeds.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Root generator for a seed.
pub fn seeded(seed: u64) -> Prng {
    Prng::seed_from_u64(splitmix64(seed))
}

/// Independent generator for sub-stream `stream` of `seed`.
pub fn derive(seed: u64, stream: u64) -> Prng {
    Prng::seed_from_u64(splitmix64(seed ^ splitmix64(stream.wrapping_add(0x51ed_2701))))
}

/// Fork a child generator off a parent, advancing the parent by one draw.
pub fn fork(parent: &mut Prng) -> Prng {
    use rand::RngCore;
    Prng::seed_from_u64(splitmix64(parent.next_u64()))
}
