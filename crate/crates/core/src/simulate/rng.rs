// Unused when std is linked (tests), where f64 has inherent methods.
#[allow(unused_imports)]
use num_traits::Float;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Random stream owned by one trajectory.
pub type PathRng = ChaCha8Rng;

/// One step of the SplitMix64 generator: advances `state` and returns the
/// mixed output.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream for trajectory `index` of an ensemble with `master_seed`.
///
/// The 256-bit ChaCha8 key is four consecutive SplitMix64 outputs started
/// from `master_seed`, written little-endian; the ChaCha stream number is the
/// trajectory index. Every trajectory of an ensemble therefore shares a key
/// and owns a disjoint stream of `2^64` blocks, independent of how the
/// ensemble is scheduled. This derivation is part of the reproducibility
/// contract and must not change.
pub fn trajectory_rng(master_seed: u64, index: u64) -> PathRng {
    let mut state = master_seed;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// Uniform variate on `(0, 1]` with 53 random bits.
#[inline]
pub fn uniform_open_closed<R: RngCore>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Exponential variate by inversion of the upper tail.
#[inline]
pub(crate) fn exponential<R: RngCore>(rng: &mut R, rate: f64) -> f64 {
    -uniform_open_closed(rng).ln() / rate
}
