use rand::{Rng as _, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Seeded random stream. Backed by ChaCha8 seeded through
/// `seed_from_u64`, so a seed produces the same draws on every platform.
#[derive(Debug, Clone)]
pub struct Rng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform draw from `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.inner.random::<f64>()
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.inner.random_range(0..=i);
            items.swap(i, j);
        }
    }
}

/// `n` independent normal draws with the given mean and standard deviation.
pub fn rng_normal(rng: &mut Rng, n: usize, mean: f64, sd: f64) -> Result<Vec<f64>> {
    if !(sd >= 0.0) || !sd.is_finite() {
        return Err(Error::Parameter(format!(
            "standard deviation must be finite and >= 0, got {sd}"
        )));
    }
    Ok((0..n).map(|_| mean + sd * rng.standard_normal()).collect())
}
