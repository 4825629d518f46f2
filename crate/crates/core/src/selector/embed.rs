use serde::{Deserialize, Serialize};

use crate::hash::fnv1a64;
use crate::{Error, Result};

/// Bag of hashed word n-grams, averaged over a learned bucket table.
///
/// Words are the lowercased whitespace-separated tokens of the text;
/// punctuation is kept since glyph noise is part of the signal. An n-gram
/// is hashed with FNV-1a 64 over its words joined by a single space and
/// mapped to `hash & (bucket_count - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingConfig {
    pub ngram_min: usize,
    pub ngram_max: usize,
    pub bucket_count: usize,
    pub dim: usize,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig { ngram_min: 1, ngram_max: 1, bucket_count: 1 << 12, dim: 16 }
    }
}

impl EmbeddingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1 <= self.ngram_min && self.ngram_min <= self.ngram_max && self.ngram_max <= 5) {
            return Err(Error::Config(format!(
                "n-gram range {}..={} must satisfy 1 <= min <= max <= 5",
                self.ngram_min, self.ngram_max
            )));
        }
        if !self.bucket_count.is_power_of_two() || self.bucket_count < 1 << 12 {
            return Err(Error::Config(format!(
                "bucket_count {} must be a power of two >= 4096",
                self.bucket_count
            )));
        }
        if self.dim == 0 {
            return Err(Error::Config("embedding dim must be positive".into()));
        }
        Ok(())
    }

    pub fn table_len(&self) -> usize {
        self.bucket_count * self.dim
    }
}

/// Bucket ids of every n-gram in `text`, in order of occurrence.
pub fn ngram_buckets(text: &str, cfg: &EmbeddingConfig) -> Vec<u32> {
    let words: Vec<String> = text.split_whitespace().map(str::to_lowercase).collect();
    let mask = (cfg.bucket_count - 1) as u64;
    let mut out = Vec::new();
    let mut buf = String::new();
    for n in cfg.ngram_min..=cfg.ngram_max {
        for gram in words.windows(n) {
            buf.clear();
            for (i, w) in gram.iter().enumerate() {
                if i > 0 {
                    buf.push(' ');
                }
                buf.push_str(w);
            }
            out.push((fnv1a64(buf.as_bytes()) & mask) as u32);
        }
    }
    out
}

/// Mean of the table rows for `buckets`; zero vector when there are none.
pub fn embed_buckets(buckets: &[u32], table: &[f64], dim: usize) -> Vec<f64> {
    let mut h = vec![0.0; dim];
    if buckets.is_empty() {
        return h;
    }
    for &b in buckets {
        let row = &table[b as usize * dim..(b as usize + 1) * dim];
        for (acc, v) in h.iter_mut().zip(row) {
            *acc += v;
        }
    }
    let inv = 1.0 / buckets.len() as f64;
    h.iter_mut().for_each(|v| *v *= inv);
    h
}

pub fn embed(text: &str, cfg: &EmbeddingConfig, table: &[f64]) -> Result<Vec<f64>> {
    if table.len() != cfg.table_len() {
        return Err(Error::DimensionMismatch { expected: cfg.table_len(), got: table.len() });
    }
    Ok(embed_buckets(&ngram_buckets(text, cfg), table, cfg.dim))
}
