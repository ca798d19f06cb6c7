//! Seeded synthetic experiments over Gaussian embeddings.
//!
//! Every operation is a pure function of its configuration and seed. Random
//! streams are documented in [`rng`].

mod experiments;
pub mod result;
pub mod rng;
mod split;

use serde::{Deserialize, Serialize};

use crate::embed_io::EmbeddingSet;
use crate::error::{Error, Result};

pub use experiments::{
    k_ablation, replacement_sweep, shift_sweep, stability_bias, synthetic_pools, variance_sweep,
    KAblation, Replace, ReplacementSweep, Role, ShiftSweep, StabilityStudy, VarianceSweep,
};
pub use result::{mean_std, Series, SweepResult};
pub use rng::{derive_seed, NormalStream};
pub use split::{outlier_count, split_outliers, OutlierSplit};

/// Isotropic Gaussian `N(mean * 1, var * I)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianSpec {
    pub n: usize,
    pub dim: usize,
    /// Every coordinate of the mean vector.
    pub mean: f64,
    /// Per-coordinate variance.
    pub var: f64,
    pub seed: u64,
}

impl GaussianSpec {
    pub fn standard(n: usize, dim: usize, seed: u64) -> Self {
        Self {
            n,
            dim,
            mean: 0.0,
            var: 1.0,
            seed,
        }
    }

    pub fn with_mean(mut self, mean: f64) -> Self {
        self.mean = mean;
        self
    }

    pub fn with_var(mut self, var: f64) -> Self {
        self.var = var;
        self
    }
}

/// Draws `n x dim` entries in row-major order from one [`NormalStream`].
pub fn sample_gaussian(spec: &GaussianSpec) -> Result<EmbeddingSet<f64>> {
    if spec.n == 0 || spec.dim == 0 {
        return Err(Error::Empty {
            n: spec.n,
            dim: spec.dim,
        });
    }
    if !(spec.var > 0.0) || !spec.var.is_finite() || !spec.mean.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "gaussian needs finite mean and positive variance (mean {}, var {})",
            spec.mean, spec.var
        )));
    }
    let sd = spec.var.sqrt();
    let mut stream = NormalStream::new(spec.seed);
    let data = (0..spec.n * spec.dim)
        .map(|_| spec.mean + sd * stream.standard_normal())
        .collect();
    EmbeddingSet::new(data, spec.n, spec.dim, "gaussian")
}

/// `count` evenly spaced points from `start` to `stop`, both included.
pub fn linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (stop - start) / (count - 1) as f64;
            (0..count)
                .map(|i| if i == count - 1 { stop } else { start + step * i as f64 })
                .collect()
        }
    }
}
