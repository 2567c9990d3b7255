//! Counter-based random draws keyed by `(seed, level, index)`.
//!
//! Each key maps to a fixed position in a ChaCha8 keystream, so values do
//! not depend on the order in which cells are generated.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::math;

#[derive(Clone, Debug)]
pub struct KeyedRng {
    base: ChaCha8Rng,
}

impl KeyedRng {
    pub fn new(seed: u64) -> Self {
        KeyedRng { base: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// Two independent uniforms in `[0, 1)` for the given key.
    pub fn uniform_pair(&mut self, stream: u64, index: u64) -> (f64, f64) {
        self.base.set_stream(stream);
        // each key owns four 32-bit words
        self.base.set_word_pos(u128::from(index) * 4);
        let a = self.base.next_u64();
        let b = self.base.next_u64();
        (to_unit(a), to_unit(b))
    }

    pub fn uniform(&mut self, stream: u64, index: u64) -> f64 {
        self.uniform_pair(stream, index).0
    }

    /// Standard normal via Box–Muller on the key's uniform pair.
    pub fn normal(&mut self, stream: u64, index: u64) -> f64 {
        let (u1, u2) = self.uniform_pair(stream, index);
        let r = math::sqrt(-2.0 * math::ln(1.0 - u1));
        r * math::cos(2.0 * core::f64::consts::PI * u2)
    }
}

#[inline]
fn to_unit(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
