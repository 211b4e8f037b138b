//! Counter-based Gaussian increments.
//!
//! The driving noise of path `i` is the ChaCha8 keystream with key derived
//! from the experiment seed, stream id `i`, and block counter advanced by one
//! 128-bit chunk per time step. Step `k` of path `i` therefore depends only on
//! `(seed, i, k)`, and paths can be simulated in any order on any number of
//! workers.

use std::f64::consts::TAU;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::SimGrid;

/// 32-bit keystream words consumed per time step (two `u64` uniforms).
const WORDS_PER_STEP: u128 = 4;

const TWO_POW_M53: f64 = 1.0 / (1u64 << 53) as f64;

/// Key of one independent noise stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub path_index: u64,
}

impl RngStream {
    pub const fn new(seed: u64, path_index: u64) -> Self {
        Self { seed, path_index }
    }

    fn cipher(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.path_index);
        rng
    }

    /// Unbounded sequence of `(dB, dC)` pairs with variance `dt` each.
    pub fn increments(&self, dt: f64) -> Increments {
        Increments {
            rng: self.cipher(),
            scale: dt.sqrt(),
        }
    }

    /// The increment pair of step `step`, computed without generating the
    /// preceding ones.
    pub fn increment_at(&self, dt: f64, step: u64) -> (f64, f64) {
        let mut rng = self.cipher();
        rng.set_word_pos(WORDS_PER_STEP * step as u128);
        let (a, b) = standard_normal_pair(&mut rng);
        let s = dt.sqrt();
        (a * s, b * s)
    }
}

/// Iterator over the Gaussian increments of one stream.
#[derive(Debug, Clone)]
pub struct Increments {
    rng: ChaCha8Rng,
    scale: f64,
}

impl Iterator for Increments {
    type Item = (f64, f64);

    #[inline]
    fn next(&mut self) -> Option<(f64, f64)> {
        let (a, b) = standard_normal_pair(&mut self.rng);
        Some((a * self.scale, b * self.scale))
    }
}

/// Box-Muller transform of two 53-bit uniforms.
#[inline]
fn standard_normal_pair(rng: &mut ChaCha8Rng) -> (f64, f64) {
    // u1 in (0, 1] keeps the logarithm finite.
    let u1 = ((rng.next_u64() >> 11) + 1) as f64 * TWO_POW_M53;
    let u2 = (rng.next_u64() >> 11) as f64 * TWO_POW_M53;
    let r = (-2.0 * u1.ln()).sqrt();
    let (s, c) = (TAU * u2).sin_cos();
    (r * c, r * s)
}

/// All increments of `stream` over `grid`.
pub fn gaussian_increments(stream: RngStream, grid: &SimGrid) -> Vec<(f64, f64)> {
    stream.increments(grid.dt()).take(grid.n_steps()).collect()
}
