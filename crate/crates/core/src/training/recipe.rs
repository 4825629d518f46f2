//! End-to-end training from a corpus with groundtruth.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{
    escalation_labels, page_examples, simulated_preferences, train_cls2, train_pipeline, LogisticConfig,
    PipelineOutput, RegressionExample, TrainConfig,
};
use crate::corpus::DocumentRecord;
use crate::metrics::MetricConfig;
use crate::parsers::{parse_first_page, ParserSet};
use crate::selector::{accuracy_matrix, EmbeddingConfig, MetadataClassifier, PredictorModel};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusTrainConfig {
    pub train: TrainConfig,
    pub embedding: EmbeddingConfig,
    pub cls2: LogisticConfig,
    /// Simulated preference pairs for the second stage.
    pub preference_pairs: usize,
    /// Heavy-minus-default BLEU above which a document counts as improvable.
    pub escalation_margin: f64,
}

impl Default for CorpusTrainConfig {
    fn default() -> Self {
        CorpusTrainConfig {
            train: TrainConfig::default(),
            embedding: EmbeddingConfig::default(),
            cls2: LogisticConfig::default(),
            preference_pairs: 300,
            escalation_margin: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CorpusModels {
    pub pipeline: PipelineOutput,
    pub cls2: MetadataClassifier,
}

impl CorpusModels {
    pub fn predictor(&self) -> &PredictorModel {
        &self.pipeline.stage3
    }
}

/// Document-level examples from a precomputed BLEU matrix.
pub fn document_examples_from(docs: &[Arc<DocumentRecord>], matrix: &[Vec<f64>], parsers: &ParserSet) -> Vec<RegressionExample> {
    let default = parsers.default_parser();
    docs.iter()
        .zip(matrix)
        .map(|(doc, row)| RegressionExample::new(parse_first_page(default, doc).text, row.clone()))
        .collect()
}

/// Trains the three-step predictor on page targets, simulated preferences
/// and document targets, plus the metadata classifier on escalation labels.
pub fn train_from_corpus(
    docs: &[Arc<DocumentRecord>],
    parsers: &ParserSet,
    metric: &MetricConfig,
    cfg: &CorpusTrainConfig,
) -> Result<CorpusModels> {
    cfg.train.validate()?;
    cfg.embedding.validate()?;
    let ids = parsers.ids().map(str::to_owned).collect();
    let init = PredictorModel::new(cfg.embedding, ids, cfg.train.seed)?;
    let pages = page_examples(docs, parsers, metric)?;
    let pairs = simulated_preferences(docs, parsers, metric, cfg.preference_pairs, cfg.train.seed ^ 0x9a17)?;
    let matrix = accuracy_matrix(docs, parsers, metric)?;
    let doc_data = document_examples_from(docs, &matrix, parsers);
    let pipeline = train_pipeline(&init, &pages, &pairs, &doc_data, &cfg.train)?;
    let labels = escalation_labels(docs, &matrix, parsers, cfg.escalation_margin);
    let cls2 = train_cls2(&labels, &cfg.cls2)?;
    Ok(CorpusModels { pipeline, cls2 })
}
