//! Counter-keyed random streams.
//!
//! Every random draw in the crate comes from a stream keyed by a base seed and
//! one or more counters, so results never depend on call order or on how work
//! is split across threads. Probes and injected noise use ChaCha; the graph
//! sampling loops use xoshiro256++, which is several times cheaper per draw.

use alloc::vec::Vec;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_xoshiro::Xoshiro256PlusPlus;

/// Fast generator for the graph sampling loops, where draw cost dominates.
pub type SamplerRng = Xoshiro256PlusPlus;

/// SplitMix64 finalizer; used to fold counters into a seed.
pub fn mix(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A generator for stream `stream` of `seed`.
pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Independent [`SamplerRng`] keyed by `(seed, stream)`.
pub fn sampler(seed: u64, stream: u64) -> SamplerRng {
    SamplerRng::seed_from_u64(mix(seed, stream))
}

/// Uniform integer in `0..n` (Lemire's multiply-and-reject; exact).
#[inline]
pub fn uniform_index<R: RngCore>(rng: &mut R, n: usize) -> usize {
    debug_assert!(n > 0);
    let n = n as u64;
    let mut m = u128::from(rng.next_u64()) * u128::from(n);
    if (m as u64) < n {
        let threshold = n.wrapping_neg() % n;
        while (m as u64) < threshold {
            m = u128::from(rng.next_u64()) * u128::from(n);
        }
    }
    (m >> 64) as usize
}

/// Rademacher probe for repetition `rep`: i.i.d. ±1 entries.
pub fn rademacher(n: usize, seed: u64, rep: u64) -> Vec<f64> {
    let mut rng = stream(seed, rep);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let bits: u64 = rng.gen();
        for b in 0..64.min(n - out.len()) {
            out.push(if (bits >> b) & 1 == 1 { 1.0 } else { -1.0 });
        }
    }
    out
}
