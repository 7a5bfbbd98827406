//! Counter-based pseudo-random source.
//!
//! Every randomized operation in the crate is keyed by an explicit 64-bit
//! seed, and individual variates are addressed by a counter rather than drawn
//! from mutable stream state. Values at distinct counters can therefore be
//! generated in any order (or in parallel) with identical results.

/// SplitMix64 finalizer: avalanche mix of a 64-bit word.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// Derives an independent sub-seed from `seed` for stream `stream`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    mix(mix(seed).wrapping_add(mix(stream.wrapping_mul(GOLDEN) ^ 0x5851_f42d_4c95_7f2d)))
}

/// Counter-addressed generator: the value at counter `c` is the SplitMix64
/// stream of the mixed seed evaluated at position `c`.
#[derive(Debug, Clone, Copy)]
pub struct CounterRng {
    key: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        Self { key: mix(seed) }
    }

    /// Raw 64-bit word at counter position `c`.
    pub fn u64_at(&self, c: u64) -> u64 {
        mix(self
            .key
            .wrapping_add(c.wrapping_add(1).wrapping_mul(GOLDEN)))
    }

    /// Uniform variate in (0, 1] at counter position `c`.
    pub fn uniform_at(&self, c: u64) -> f64 {
        // 53 significant bits; +1 keeps the value strictly positive so that
        // ln(u) below is always finite.
        (((self.u64_at(c) >> 11) + 1) as f64) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal variate at index `i` (Box–Muller; consumes counters
    /// 2i and 2i+1).
    pub fn gaussian_at(&self, i: u64) -> f64 {
        let u1 = self.uniform_at(2 * i);
        let u2 = self.uniform_at(2 * i + 1);
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Uniform index in `0..len`.
    pub fn index_at(&self, c: u64, len: usize) -> usize {
        debug_assert!(len > 0);
        // Multiply-shift range reduction; bias is ~len/2^64, negligible here.
        ((self.u64_at(c) as u128 * len as u128) >> 64) as usize
    }
}
