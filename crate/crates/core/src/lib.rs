//! Parallel-corpus quality toolkit: exact deduplication, cross-lingual
//! similarity filtering and translation-quality metrics.

pub mod dedup;
pub mod error;
pub mod ingest;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod similarity;
pub mod synth;

pub use error::{Error, Result};
pub use model::{
    clamp_similarity, CorpusStats, DiscrepancyLabel, ScoredPair, SentencePair, SimilarityThreshold,
};
