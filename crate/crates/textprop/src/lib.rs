//! Graph-based transductive label propagation for semi-supervised text
//! classification.
//!
//! The library covers the full pipeline: corpus ingestion and indexing,
//! pretrained embedding alignment, cosine kNN graph construction, label
//! diffusion through a sparse linear system, entropy-weighted pseudo-labels,
//! and a three-stage training comparison (baseline / label propagation /
//! fully supervised) driven by a single experiment config.
//!
//! Data-parallel inner loops (kNN search, per-class diffusion solves, batch
//! evaluation) run on rayon when the default `parallel` feature is enabled
//! and fall back to sequential iteration otherwise.

pub mod corpus;
pub mod diffusion;
pub mod embeddings;
pub mod error;
pub mod graph;
pub(crate) mod hash;
pub mod model;
pub mod parallel;
pub mod pipeline;
pub mod synth;

pub use error::{Error, Result};
