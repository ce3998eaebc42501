//! Portable seeded random streams.
//!
//! The generator is xoshiro256++ seeded by expanding a 64-bit seed with
//! SplitMix64 (the reference seeding of that family). Derived draws:
//!
//! * uniform `f64` in `[0, 1)`: `(next_u64 >> 11) * 2^-53`;
//! * uniform on `[a, b)`: `a + (b - a) * u`;
//! * standard normal: Box-Muller cosine branch,
//!   `sqrt(-2 ln(1 - u1)) * cos(2 pi u2)`, consuming two uniforms.
//!
//! Any implementation following these rules reproduces the streams exactly.

use core::f64::consts::PI;

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

#[derive(Debug, Clone)]
pub struct SceneRng(Xoshiro256PlusPlus);

impl SceneRng {
    pub fn new(seed: u64) -> Self {
        Self(Xoshiro256PlusPlus::seed_from_u64(seed))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in `0..n` by multiply-shift on the top 32 bits.
    pub fn below(&mut self, n: u32) -> u32 {
        (((self.next_u64() >> 32) * u64::from(n)) >> 32) as u32
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = self.uniform();
        let u2 = self.uniform();
        libm::sqrt(-2.0 * libm::log(1.0 - u1)) * libm::cos(2.0 * PI * u2)
    }
}
