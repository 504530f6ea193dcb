//! Seeded 64-bit linear congruential generator.
//!
//! Verification runs must produce identical defect tables across machines
//! and implementations, so the random fields are drawn from a fully
//! specified generator rather than a library RNG:
//!
//! ```text
//! x_{k+1} = (6364136223846793005 * x_k + 1442695040888963407) mod 2^64
//! ```
//!
//! A sample in [-1, 1) is formed from the top 53 bits:
//! `u = 2 * (x >> 11) / 2^53 - 1`.

const MULTIPLIER: u64 = 6364136223846793005;
const INCREMENT: u64 = 1442695040888963407;

/// Deterministic LCG; identical sequences for identical seeds on any platform.
#[derive(Clone, Debug)]
pub struct Lcg64 {
    state: u64,
}

impl Lcg64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_mul(MULTIPLIER).wrapping_add(INCREMENT);
        self.state
    }

    /// Uniform sample in [-1, 1).
    pub fn next_unit(&mut self) -> f64 {
        let bits = self.next_u64() >> 11; // 53 significant bits
        2.0 * (bits as f64) / (1u64 << 53) as f64 - 1.0
    }

    /// Fills a vector with uniform samples in [-1, 1).
    pub fn fill(&mut self, len: usize) -> Vec<f64> {
        (0..len).map(|_| self.next_unit()).collect()
    }
}
