//! Inlier/outlier partition by k-th nearest-neighbour distance.

use serde::{Deserialize, Serialize};

use crate::embed_io::EmbeddingSet;
use crate::error::{Error, Result};
use crate::nn::{knn_radii, ChunkPlan};
use crate::scalar::Scalar;

/// Partition of `0..N` into inliers and outliers, both ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierSplit {
    pub inlier_indices: Vec<usize>,
    pub outlier_indices: Vec<usize>,
    /// NND_k of every sample, the ranking criterion.
    pub criterion: Vec<f64>,
    pub criterion_k: usize,
    pub ratio: f64,
}

impl OutlierSplit {
    pub fn n(&self) -> usize {
        self.criterion.len()
    }
}

/// Number of outliers for `ratio` of `n`, i.e. `ceil(ratio * n)` with a
/// guard against representation error (`0.05 * 100` must give 5, not 6).
pub fn outlier_count(ratio: f64, n: usize) -> usize {
    let raw = ratio * n as f64;
    let rounded = raw.round();
    if (raw - rounded).abs() <= 1e-9 * raw.max(1.0) {
        rounded as usize
    } else {
        raw.ceil() as usize
    }
}

/// Marks the `ceil(ratio * N)` samples with the largest NND_k as outliers.
/// Among equal criteria the lower index stays an inlier.
pub fn split_outliers<T: Scalar>(
    set: &EmbeddingSet<T>,
    k: usize,
    ratio: f64,
    plan: ChunkPlan,
) -> Result<OutlierSplit> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "outlier ratio must lie in (0, 1), got {ratio}"
        )));
    }
    let criterion: Vec<f64> = knn_radii(set, k, plan)?
        .radii()
        .iter()
        .map(|r| r.as_f64())
        .collect();
    let n = criterion.len();
    let n_out = outlier_count(ratio, n).min(n);

    let mut ranked: Vec<usize> = (0..n).collect();
    ranked.sort_by(|&i, &j| {
        criterion[j]
            .partial_cmp(&criterion[i])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(j.cmp(&i))
    });
    let mut outlier_indices = ranked[..n_out].to_vec();
    let mut inlier_indices = ranked[n_out..].to_vec();
    outlier_indices.sort_unstable();
    inlier_indices.sort_unstable();
    Ok(OutlierSplit {
        inlier_indices,
        outlier_indices,
        criterion,
        criterion_k: k,
        ratio,
    })
}
