//! Seedable random streams shared by the circuit generator and the sampling
//! workers.
//!
//! Every random draw in this crate comes from a ChaCha8 stream built by
//! [`stream_from_seed`]. ChaCha is a counter-mode stream cipher, so a stream
//! is a pure function of its 64-bit seed: identical across runs, platforms
//! and thread counts. Distinct seeds give independent streams, which is how
//! sampling jobs are split — see [`mix_seed`].

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// SplitMix64 finalizer. Bijective over `u64`.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a worker's sampling seed from the run-level base seed and its job
/// id.
///
/// The mixing function is `splitmix64(base_seed +w splitmix64(job_id))`
/// (`+w` = wrapping add). For a fixed base seed it is injective in `job_id`,
/// so no two jobs of one run ever share a stream.
pub fn mix_seed(base_seed: u64, job_id: u64) -> u64 {
    splitmix64(base_seed.wrapping_add(splitmix64(job_id)))
}

/// Builds the ChaCha8 stream for a 64-bit seed.
///
/// The 256-bit key is filled with successive SplitMix64 outputs:
/// `k[0] = splitmix64(seed)`, `k[i+1] = splitmix64(k[i])`, each written
/// little-endian. This mapping is part of the on-disk reproducibility
/// contract and must not change.
pub fn stream_from_seed(seed: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    let mut s = seed;
    for chunk in key.chunks_exact_mut(8) {
        s = splitmix64(s);
        chunk.copy_from_slice(&s.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Uniform `f64` in `[0, 1)` using the top 53 bits of one `u64` draw.
pub fn next_f64(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform integer in `[0, n)` by rejection sampling; free of modulo bias.
pub fn uniform_below(rng: &mut ChaCha8Rng, n: u32) -> u32 {
    assert!(n > 0, "uniform_below requires n > 0");
    // 2^32 mod n, computed in u32 arithmetic.
    let threshold = n.wrapping_neg() % n;
    loop {
        let v = rng.next_u32();
        if v >= threshold {
            return v % n;
        }
    }
}
