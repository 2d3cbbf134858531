//! Seeded random phase-space states.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::phase::PhaseState;

/// Default half-width of the sampling box `[−2, 2]`.
pub const BOX_HALF_WIDTH: f64 = 2.0;

/// Default exclusion radius around singular sets.
pub const EXCLUSION: f64 = 1e-3;

/// Uniform sampler on the box `[−w, w]^{2d}`; all randomness in the crate
/// goes through one of these, seeded explicitly.
pub struct StateSampler {
    rng: ChaCha8Rng,
    half_width: f64,
}

impl StateSampler {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed), half_width: BOX_HALF_WIDTH }
    }

    pub fn with_half_width(mut self, w: f64) -> Self {
        self.half_width = w;
        self
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.gen_range(lo..hi)
    }

    pub fn vector(&mut self, d: usize) -> Vec<f64> {
        let w = self.half_width;
        (0..d).map(|_| self.rng.gen_range(-w..w)).collect()
    }

    pub fn state(&mut self, d: usize) -> PhaseState {
        let q = self.vector(d);
        let p = self.vector(d);
        PhaseState::from_parts(q, p)
    }

    /// Draws `n` states accepted by `accept`, trying at most `100·n` times.
    pub fn batch<F>(&mut self, n: usize, d: usize, mut accept: F) -> Result<Vec<PhaseState>>
    where
        F: FnMut(&PhaseState) -> bool,
    {
        let budget = 100 * n.max(1);
        let mut out = Vec::with_capacity(n);
        let mut tries = 0;
        while out.len() < n {
            if tries == budget {
                return Err(Error::InvalidInput(format!(
                    "sampler accepted only {} of {n} states in {budget} attempts",
                    out.len()
                )));
            }
            tries += 1;
            let s = self.state(d);
            if accept(&s) {
                out.push(s);
            }
        }
        Ok(out)
    }
}
