//! kNN-based fidelity and diversity metrics for generative models.
//!
//! The crate computes Improved Precision/Recall, Density/Coverage and
//! Probabilistic Precision/Recall from embedding matrices, plus a seeded
//! synthetic laboratory for robustness and stability studies.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the `f64` working precision used by the loaders and the CLI.

pub mod embed_io;
pub mod error;
pub mod metrics;
pub mod nn;
pub mod scalar;
pub mod scoring;
pub mod synthlab;

pub use embed_io::{load_embeddings, load_embeddings_auto, save_embeddings, EmbeddingSet, Format};
pub use error::{Error, Result};
pub use metrics::{compute_report, compute_reports, evaluate, Family, MetricConfig, MetricReport, MetricValues};
pub use nn::{knn_radii, knn_radii_multi, mean_knn_radius, pairwise_block, ChunkPlan, KnnRadii};
pub use scalar::{Dtype, Scalar};
pub use scoring::{Rule, ScoreVector, ThresholdRadius};

/// Working-precision embedding matrix.
pub type Embeddings = EmbeddingSet<f64>;
pub type Embeddings32 = EmbeddingSet<f32>;
pub type Radii = KnnRadii<f64>;
pub type Radii32 = KnnRadii<f32>;
pub type Threshold = ThresholdRadius<f64>;
pub type Scores = ScoreVector<f64>;
