//! Seeded, reproducible randomness: Gaussian deviates, projection matrices and
//! permutations.
//!
//! Every generator is a ChaCha8 stream keyed by a 64-bit seed. Child streams
//! are derived from a parent seed and a path of stream ids, so work items
//! (run, boosting round, projection) get the same numbers in any execution
//! order.

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::linalg::DenseMatrix;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RandomError {
    #[error("variance must be non-negative and finite, got {0}")]
    InvalidVariance(f64),
    #[error("projection dimensions must be positive, got {d}x{m}")]
    ZeroDimension { d: usize, m: usize },
}

/// Mixes a seed with a sequence of stream ids (splitmix64 finalizer per step).
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    path.iter().fold(mix(seed), |acc, &id| mix(acc ^ mix(id)))
}

#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// An independent generator for the stream `path` under `seed`.
    pub fn derived(seed: u64, path: &[u64]) -> Self {
        Self::new(derive_seed(seed, path))
    }

    /// An independent child of this generator's seed; does not advance `self`.
    pub fn child(&self, path: &[u64]) -> Self {
        Self::derived(self.seed, path)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    pub fn normal(&mut self, mean: f64, variance: f64) -> Result<f64, RandomError> {
        if !(variance.is_finite() && variance >= 0.0) {
            return Err(RandomError::InvalidVariance(variance));
        }
        if variance == 0.0 {
            return Ok(mean);
        }
        Ok(mean + variance.sqrt() * self.standard_normal())
    }

    /// A `d x m` matrix with entries drawn i.i.d. from `N(0, 1/d)`.
    pub fn projection_matrix(&mut self, d: usize, m: usize) -> Result<DenseMatrix, RandomError> {
        if d == 0 || m == 0 {
            return Err(RandomError::ZeroDimension { d, m });
        }
        let scale = 1.0 / (d as f64).sqrt();
        let data = (0..d * m).map(|_| scale * self.standard_normal()).collect();
        Ok(DenseMatrix::new(d, m, data).expect("length matches shape"))
    }

    /// A uniformly random permutation of `0..n`.
    pub fn shuffled_indices(&mut self, n: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut self.inner);
        idx
    }
}
