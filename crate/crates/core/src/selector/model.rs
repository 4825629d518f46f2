use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::embed::{embed_buckets, ngram_buckets, EmbeddingConfig};
use super::metadata::sigmoid;
use crate::corpus::DocumentRecord;
use crate::metrics::{bleu, MetricConfig};
use crate::parsers::{parse, ParserSet};
use crate::{Error, Result};

pub const WEIGHT_FORMAT_VERSION: u32 = 1;

/// Text-only accuracy predictor: hashed n-gram encoder, a linear head with
/// one output per parser, and a scalar preference head used during
/// preference post-training.
///
/// `stage` records which training step produced the weights (0 = untrained).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorModel {
    pub format_version: u32,
    pub stage: u8,
    pub config: EmbeddingConfig,
    pub parser_ids: Vec<String>,
    /// Row-major `bucket_count x dim`.
    pub embedding: Vec<f64>,
    /// Row-major `m x dim`.
    pub head_weights: Vec<f64>,
    pub head_bias: Vec<f64>,
    pub pref_weights: Vec<f64>,
    pub pref_bias: f64,
}

impl PredictorModel {
    /// Small random encoder and head, zero preference head.
    pub fn new(config: EmbeddingConfig, parser_ids: Vec<String>, seed: u64) -> Result<Self> {
        config.validate()?;
        if parser_ids.is_empty() {
            return Err(Error::Config("predictor needs at least one output".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let embedding = (0..config.table_len()).map(|_| rng.gen_range(-0.1..0.1)).collect();
        let m = parser_ids.len();
        let head_weights = (0..m * config.dim).map(|_| rng.gen_range(-0.1..0.1)).collect();
        Ok(PredictorModel {
            format_version: WEIGHT_FORMAT_VERSION,
            stage: 0,
            config,
            parser_ids,
            embedding,
            head_weights,
            head_bias: vec![0.0; m],
            pref_weights: vec![0.0; config.dim],
            pref_bias: 0.0,
        })
    }

    pub fn m(&self) -> usize {
        self.parser_ids.len()
    }

    pub fn dim(&self) -> usize {
        self.config.dim
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        if self.format_version != WEIGHT_FORMAT_VERSION {
            return Err(Error::Config(format!("unsupported weight format {}", self.format_version)));
        }
        let (m, dim) = (self.m(), self.dim());
        for (expected, got) in [
            (self.config.table_len(), self.embedding.len()),
            (m * dim, self.head_weights.len()),
            (m, self.head_bias.len()),
            (dim, self.pref_weights.len()),
        ] {
            if expected != got {
                return Err(Error::DimensionMismatch { expected, got });
            }
        }
        let finite = self
            .embedding
            .iter()
            .chain(&self.head_weights)
            .chain(&self.head_bias)
            .chain(&self.pref_weights)
            .chain(std::iter::once(&self.pref_bias))
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Precondition("model has non-finite weights".into()));
        }
        Ok(())
    }

    pub fn buckets(&self, text: &str) -> Vec<u32> {
        ngram_buckets(text, &self.config)
    }

    pub fn encode(&self, text: &str) -> Vec<f64> {
        self.encode_buckets(&self.buckets(text))
    }

    pub fn encode_buckets(&self, buckets: &[u32]) -> Vec<f64> {
        embed_buckets(buckets, &self.embedding, self.dim())
    }

    /// Unclamped head output.
    pub fn head(&self, h: &[f64]) -> Vec<f64> {
        let dim = self.dim();
        (0..self.m())
            .map(|j| {
                let row = &self.head_weights[j * dim..(j + 1) * dim];
                self.head_bias[j] + row.iter().zip(h).map(|(w, x)| w * x).sum::<f64>()
            })
            .collect()
    }

    pub fn predict_accuracy(&self, first_page_text: &str) -> Vec<f64> {
        self.head(&self.encode(first_page_text)).into_iter().map(|v| v.clamp(0.0, 1.0)).collect()
    }

    /// Preference score g(x) in (0, 1).
    pub fn preference_score(&self, text: &str) -> f64 {
        self.preference_score_encoded(&self.encode(text))
    }

    pub fn preference_score_encoded(&self, h: &[f64]) -> f64 {
        sigmoid(self.pref_bias + self.pref_weights.iter().zip(h).map(|(w, x)| w * x).sum::<f64>())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let model: PredictorModel = serde_json::from_str(s)?;
        model.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path)?;
        Self::from_json(&s).map_err(|e| e.context(format!("loading weights from {}", path.display())))
    }
}

/// Anything that turns a first-page extraction into per-parser accuracy estimates.
pub trait AccuracyPredictor: Send + Sync {
    fn outputs(&self) -> usize;
    fn predict(&self, doc_id: &str, first_page_text: &str) -> Vec<f64>;
}

impl AccuracyPredictor for PredictorModel {
    fn outputs(&self) -> usize {
        self.m()
    }

    fn predict(&self, _doc_id: &str, first_page_text: &str) -> Vec<f64> {
        self.predict_accuracy(first_page_text)
    }
}

impl<P: AccuracyPredictor + ?Sized> AccuracyPredictor for Arc<P> {
    fn outputs(&self) -> usize {
        (**self).outputs()
    }

    fn predict(&self, doc_id: &str, first_page_text: &str) -> Vec<f64> {
        (**self).predict(doc_id, first_page_text)
    }
}

/// Looks up known per-parser accuracies by doc id; unknown docs get zeros.
#[derive(Debug, Clone, Default)]
pub struct OraclePredictor {
    m: usize,
    table: HashMap<String, Vec<f64>>,
}

impl OraclePredictor {
    pub fn new(m: usize) -> Self {
        OraclePredictor { m, table: HashMap::new() }
    }

    pub fn insert(&mut self, doc_id: impl Into<String>, accuracy: Vec<f64>) -> Result<()> {
        if accuracy.len() != self.m {
            return Err(Error::DimensionMismatch { expected: self.m, got: accuracy.len() });
        }
        self.table.insert(doc_id.into(), accuracy);
        Ok(())
    }

    /// True document BLEU of every parser against groundtruth.
    pub fn from_corpus(docs: &[Arc<DocumentRecord>], parsers: &ParserSet, metric: &MetricConfig) -> Result<Self> {
        let matrix = accuracy_matrix(docs, parsers, metric)?;
        let mut oracle = OraclePredictor::new(parsers.len());
        for (doc, row) in docs.iter().zip(matrix) {
            oracle.insert(doc.doc_id.clone(), row)?;
        }
        Ok(oracle)
    }

    pub fn get(&self, doc_id: &str) -> Option<&[f64]> {
        self.table.get(doc_id).map(Vec::as_slice)
    }
}

impl AccuracyPredictor for OraclePredictor {
    fn outputs(&self) -> usize {
        self.m
    }

    fn predict(&self, doc_id: &str, _first_page_text: &str) -> Vec<f64> {
        self.table.get(doc_id).cloned().unwrap_or_else(|| vec![0.0; self.m])
    }
}

/// `docs.len() x parsers.len()` matrix of document BLEU, parsed in parallel.
pub fn accuracy_matrix(docs: &[Arc<DocumentRecord>], parsers: &ParserSet, metric: &MetricConfig) -> Result<Vec<Vec<f64>>> {
    if let Some(d) = docs.iter().find(|d| d.groundtruth.is_none()) {
        return Err(Error::Precondition(format!("{} has no groundtruth", d.doc_id)));
    }
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get()).max(1);
    let chunk = docs.len().div_ceil(threads).max(1);
    let mut out = Vec::with_capacity(docs.len());
    std::thread::scope(|s| {
        let handles: Vec<_> = docs
            .chunks(chunk)
            .map(|part| {
                s.spawn(move || {
                    part.iter()
                        .map(|doc| {
                            let gt = doc.groundtruth.as_deref().unwrap_or_default();
                            parsers.parsers().iter().map(|p| bleu(&parse(p, doc).text, gt, metric)).collect::<Vec<f64>>()
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            out.extend(h.join().expect("accuracy worker panicked"));
        }
    });
    Ok(out)
}
