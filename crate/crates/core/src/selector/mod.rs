//! Routing cascade: validity check, metadata classifier and accuracy predictor.

mod embed;
mod metadata;
mod model;
mod route;
mod stats;

pub use embed::{embed, embed_buckets, ngram_buckets, EmbeddingConfig};
pub use metadata::{cls2_improvement, MetadataClassifier, MetadataVocab, CATEGORICAL_FIELDS};
pub(crate) use metadata::sigmoid;
pub use model::{accuracy_matrix, AccuracyPredictor, OraclePredictor, PredictorModel, WEIGHT_FORMAT_VERSION};
pub use route::{
    check_alpha, heavy_cap, route_ft, route_llm, select_heavy, Candidate, Probe, RouteStage, RoutingDecision,
};
pub use stats::{cls1_validity, text_stats, TextStats, ValidityThresholds};
