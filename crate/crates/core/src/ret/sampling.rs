use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Floor on the number of points a residual-inequality check visits.
pub const MIN_SAMPLES: usize = 1000;

/// Seeded uniform points in an axis-aligned box, plus explicit extra points.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainSampler {
    pub center: Vec<f64>,
    pub half_width: f64,
    pub count: usize,
    pub seed: u64,
    pub extra: Vec<Vec<f64>>,
}

impl DomainSampler {
    pub fn cube(center: Vec<f64>, half_width: f64, seed: u64) -> Self {
        DomainSampler { center, half_width, count: MIN_SAMPLES, seed, extra: Vec::new() }
    }

    /// Requested sample count, never below `MIN_SAMPLES`.
    pub fn with_count(mut self, count: usize) -> Self {
        self.count = count.max(MIN_SAMPLES);
        self
    }

    pub fn with_points(mut self, extra: Vec<Vec<f64>>) -> Self {
        self.extra = extra;
        self
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let w = self.half_width;
        let mut out: Vec<Vec<f64>> = (0..self.count.max(MIN_SAMPLES))
            .map(|_| self.center.iter().map(|c| c + if w > 0.0 { rng.gen_range(-w..=w) } else { 0.0 }).collect())
            .collect();
        out.extend(self.extra.iter().cloned());
        out
    }
}
