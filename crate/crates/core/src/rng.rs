//! Counter-based random number streams.
//!
//! Every particle owns an independent stream keyed by a 64-bit value derived
//! from the replication seed and the particle's place in the tree. The k-th
//! draw of a stream is a pure function of (key, k), so replications are
//! reproducible bit-for-bit regardless of thread scheduling, and two runs
//! that share a seed see the *same* underlying tree realization even when
//! one of them kills particles earlier (the coupling used by the
//! monotonicity-in-L check).

use std::f64::consts::TAU;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// splitmix64 finalizer: bijective, passes BigCrush as a counter generator.
#[inline]
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Combine a stream key with a salt into a new independent key.
#[inline]
pub fn derive_key(key: u64, salt: u64) -> u64 {
    mix(mix(key) ^ mix(salt.wrapping_add(0xA5A5_A5A5_0F0F_0F0F)))
}

/// Key for a child stream spawned at step `step` (child index 0 or 1).
#[inline]
pub fn child_key(parent: u64, step: u64, which: u64) -> u64 {
    derive_key(parent, step.wrapping_mul(2).wrapping_add(which).wrapping_add(1))
}

/// A stateless-counter RNG: output i is `mix(key + i*GOLDEN)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterRng {
    key: u64,
    ctr: u64,
}

impl CounterRng {
    pub fn new(key: u64) -> Self {
        CounterRng { key, ctr: 0 }
    }

    pub fn from_seed_and_index(seed: u64, index: u64) -> Self {
        CounterRng::new(derive_key(mix(seed), index))
    }

    /// The stream identity, used to derive child streams.
    pub fn key(&self) -> u64 {
        self.key
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let out = mix(self.key.wrapping_add(self.ctr.wrapping_mul(GOLDEN)));
        self.ctr = self.ctr.wrapping_add(1);
        out
    }

    /// Uniform on [0, 1) with 53 bits of mantissa.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Standard normal via Box-Muller. Always consumes exactly two uniforms
    /// and returns the cosine branch only, so stream positions stay aligned
    /// across coupled runs.
    #[inline]
    pub fn normal(&mut self) -> f64 {
        let u1 = self.uniform();
        let u2 = self.uniform();
        // 1 - u1 keeps the log argument in (0, 1], avoiding ln(0).
        (-2.0 * (1.0 - u1).ln()).sqrt() * (TAU * u2).cos()
    }
}
