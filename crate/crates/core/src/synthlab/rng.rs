//! Reproducible random streams.
//!
//! * Generator: xoshiro256++ (`rand_xoshiro::Xoshiro256PlusPlus`), seeded
//!   through its SplitMix64 `seed_from_u64` expansion.
//! * Normal variates: basic Box-Muller on pairs of uniforms, with
//!   `u1 = ((x >> 11) + 1) * 2^-53` in (0, 1] and `u2 = (y >> 11) * 2^-53` in
//!   [0, 1); both `r cos(2 pi u2)` and `r sin(2 pi u2)` are used, in that
//!   order. Transcendentals come from `libm`, so streams are bit-identical
//!   across platforms.
//! * Sub-streams: [`derive_seed`] folds a path of integers into a seed with
//!   the SplitMix64 finaliser, `h <- mix(h ^ mix(part))`, starting from
//!   `h = mix(base)`. Every (experiment, run, grid point, role) owns one path,
//!   so results never depend on scheduling.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function applied to `x + golden`.
pub fn mix(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix(base), |h, &p| mix(h ^ mix(p)))
}

/// Standard normal variates from xoshiro256++ and Box-Muller.
pub struct NormalStream {
    rng: Xoshiro256PlusPlus,
    spare: Option<f64>,
}

impl NormalStream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: Xoshiro256PlusPlus::seed_from_u64(seed),
            spare: None,
        }
    }

    /// Uniform in [0, 1) with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = self.uniform();
        let r = libm::sqrt(-2.0 * libm::log(u1));
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * libm::sin(theta));
        r * libm::cos(theta)
    }

    /// Uniform index in `0..n` by rejection (no modulo bias).
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0);
        let n = n as u64;
        let zone = u64::MAX - u64::MAX % n;
        loop {
            let x = self.rng.next_u64();
            if x < zone {
                return (x % n) as usize;
            }
        }
    }

    /// Fisher-Yates shuffle, last position first.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}
