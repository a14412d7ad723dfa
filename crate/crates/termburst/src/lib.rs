//! Influence-class account labeling and viral topic detection over
//! temporal term co-occurrence graphs.
//!
//! The pipeline: ingest a JSONL post archive, classify accounts into
//! media-driven (MDI) vs interaction-driven (IDI) influence classes with a
//! logistic model grown by snowball labeling, then per class and temporal
//! granularity build sparse term co-occurrence matrices, score term pairs
//! by popularity (cross-pair z-score), burstiness (cross-time z-score),
//! and their weighted blend, threshold the blend into an adjacency graph,
//! and rank the connected components as topic clusters.
//!
//! Each module has a runnable walkthrough under `examples/`:
//! `cargo run --example tokenize_archive`, `fit_classifier`,
//! `snowball_labels`, `cooccurrence_frames`, `score_and_threshold`,
//! `rank_topic_clusters`, `synth_detect_end_to_end`.

pub mod classify;
pub mod cluster;
pub mod error;
pub mod graph;
pub mod ingest;
pub mod pipeline;
pub mod score;

pub use error::{Error, Result};
