//! Node-level differentially private adversarial embedding of signed graphs.
//!
//! The pipeline splits a signed graph into its positive and negative views,
//! samples constrained BFS-tree paths per root to produce fake node pairs,
//! and trains a pair of generator/discriminator embedding tables. Only the
//! discriminator touches private edges, and its gradients are clipped per
//! node and perturbed with Gaussian noise calibrated to the receptive-field
//! bound of the sampler. Privacy cost is tracked with a Rényi accountant
//! under hypergeometric subsampling.
//!
//! Numeric kernels are generic over [`Scalar`]; [`Embeddings`] and
//! [`Embeddings32`] are the concrete tables used by the CLI and tests.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod accountant;
pub mod dp;
pub mod error;
pub mod eval;
pub mod graph;
pub mod model;
pub mod rng;
pub mod sampler;
pub mod scalar;
pub mod trainer;

pub use accountant::{PrivacyLedger, SubsampledGaussian};
pub use dp::DpConfig;
pub use error::{Error, Result};
pub use graph::{EdgeSplit, Sign, SignedGraph};
pub use model::{EdgeCase, EmbeddingTable};
pub use sampler::SubgraphSet;
pub use scalar::Scalar;
pub use trainer::{TrainConfig, TrainReport};

/// Double-precision embedding table (the default everywhere).
pub type Embeddings = EmbeddingTable<f64>;
/// Single-precision embedding table.
pub type Embeddings32 = EmbeddingTable<f32>;
/// Double-precision training output.
pub type TrainOutput = trainer::TrainOutput<f64>;
