//! Seed derivation and the few sampling primitives the algorithms need.
//!
//! Every consumer of randomness gets its own ChaCha8 stream keyed by
//! `(seed, tag, index)`. Streams for different ensemble members or
//! replicates never depend on the order in which they are consumed, which
//! keeps results independent of scheduling. Integer sampling goes through
//! `u64` arithmetic only, so streams are identical on 32- and 64-bit
//! targets.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

pub use rand_chacha::ChaCha8Rng as StreamRng;

/// Purpose tags for sub-stream derivation.
pub mod tag {
    pub const RESAMPLE: u64 = 0x7265_7361_6d70_6c65;
    pub const SELECTOR: u64 = 0x7365_6c65_6374_6f72;
    pub const VALIDATION: u64 = 0x7661_6c69_6461_7465;
    pub const TREE: u64 = 0x0074_7265_6500_0001;
    pub const FERN: u64 = 0x0066_6572_6e00_0002;
    pub const PERMUTE: u64 = 0x7065_726d_7574_6500;
    pub const SHADOW: u64 = 0x7368_6164_6f77_0000;
    pub const IMPORTANCE: u64 = 0x696d_706f_7274_0000;
    pub const ASSESS: u64 = 0x6173_7365_7373_0000;
    pub const SYNTH: u64 = 0x7379_6e74_6800_0000;
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a seed with a purpose tag and an index into a child seed.
pub fn derive(seed: u64, tag: u64, index: u64) -> u64 {
    splitmix(splitmix(splitmix(seed) ^ tag) ^ index.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

/// Named sub-stream of `seed`.
pub fn stream(seed: u64, tag: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(seed, tag, index))
}

/// Uniform integer in `0..n`; `n` must be positive.
pub fn below<R: RngCore + ?Sized>(rng: &mut R, n: usize) -> usize {
    debug_assert!(n > 0);
    let n = n as u64;
    // Lemire's multiply-shift with rejection.
    let mut m = u128::from(rng.next_u64()) * u128::from(n);
    if (m as u64) < n {
        let t = n.wrapping_neg() % n;
        while (m as u64) < t {
            m = u128::from(rng.next_u64()) * u128::from(n);
        }
    }
    (m >> 64) as usize
}

/// Uniform float in `[0, 1)` with 53 random bits.
pub fn unit<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal deviate (Box-Muller, one value per call).
pub fn standard_normal<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    let u1 = 1.0 - unit(rng); // (0, 1]
    let u2 = unit(rng);
    libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(core::f64::consts::TAU * u2)
}

/// In-place Fisher-Yates shuffle.
pub fn shuffle<T, R: RngCore + ?Sized>(rng: &mut R, items: &mut [T]) {
    for i in (1..items.len()).rev() {
        let j = below(rng, i + 1);
        items.swap(i, j);
    }
}
