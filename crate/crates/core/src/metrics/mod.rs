//! Text-quality measures for evaluating parser output against groundtruth.
//!
//! Every function here is pure and safe to call concurrently.
//!
//! Tokenization is fixed: lowercase, drop every character that is neither
//! alphanumeric nor whitespace, then split on whitespace. BLEU and ROUGE both
//! use it, so they are invariant under re-tokenizing already tokenized text.

mod aggregate;
mod edit;
mod overlap;
mod preference;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use aggregate::{accepted_tokens, coverage, page_coverage};
pub use edit::{levenshtein, levenshtein_banded};
pub use overlap::{bleu, bleu_tokens, rouge, rouge_tokens};
pub use preference::{consensus_rate, win_rate, Choice, PreferenceRecord};

/// Separator between pages in a flattened multi-page text.
pub const PAGE_BREAK: char = '\u{c}';

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BleuSmoothing {
    None,
    /// Add-one on n-gram orders 2 and above.
    #[default]
    AddOne,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum RougeVariant {
    #[default]
    #[serde(rename = "rouge1_f")]
    Rouge1F,
    #[serde(rename = "rougeL_f")]
    RougeLF,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricConfig {
    pub bleu_max_ngram: usize,
    pub bleu_smoothing: BleuSmoothing,
    pub rouge_variant: RougeVariant,
    /// Half-width of the DP band used once a text exceeds four band widths.
    pub car_band_width: usize,
    /// BLEU threshold for the accepted-tokens measure.
    pub at_threshold: f64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            bleu_max_ngram: 4,
            bleu_smoothing: BleuSmoothing::AddOne,
            rouge_variant: RougeVariant::Rouge1F,
            car_band_width: 1024,
            at_threshold: 0.5,
        }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=8).contains(&self.bleu_max_ngram) {
            return Err(Error::Config(format!(
                "bleu_max_ngram must be in 1..=8, got {}",
                self.bleu_max_ngram
            )));
        }
        if !(0.0..=1.0).contains(&self.at_threshold) {
            return Err(Error::Config(format!(
                "at_threshold must be in [0,1], got {}",
                self.at_threshold
            )));
        }
        if self.car_band_width == 0 {
            return Err(Error::Config("car_band_width must be at least 1".into()));
        }
        Ok(())
    }
}

pub fn tokenize(text: &str) -> Vec<String> {
    let cleaned: String = text
        .chars()
        .filter(|c| c.is_alphanumeric() || c.is_whitespace())
        .flat_map(char::to_lowercase)
        .collect();
    cleaned.split_whitespace().map(str::to_owned).collect()
}

/// Character accuracy rate: `1 - distance / max(len)`, clamped at zero.
///
/// Two empty texts score 1.0. Texts longer than `4 * car_band_width`
/// characters use the banded distance, which can only overestimate the true
/// distance, so the returned value is then a lower bound.
pub fn car(candidate: &str, reference: &str, cfg: &MetricConfig) -> f64 {
    let a: Vec<char> = candidate.chars().collect();
    let b: Vec<char> = reference.chars().collect();
    let longest = a.len().max(b.len());
    if longest == 0 {
        return 1.0;
    }
    let band = cfg.car_band_width.max(1);
    let distance = if longest > 4 * band {
        log::debug!("car: {longest} chars exceeds band limit, using approximate banded distance");
        edit::levenshtein_banded_chars(&a, &b, band)
    } else {
        edit::levenshtein_chars(&a, &b)
    };
    (1.0 - distance as f64 / longest as f64).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityScores {
    pub coverage: f64,
    pub bleu: f64,
    pub rouge: f64,
    pub car: f64,
    pub accepted: bool,
}

impl QualityScores {
    /// Scores a flattened candidate (pages joined by [`PAGE_BREAK`]) against
    /// the document's groundtruth.
    pub fn compute(
        candidate: &str,
        groundtruth: &str,
        page_count: usize,
        cfg: &MetricConfig,
    ) -> Result<Self> {
        let cand_tokens = tokenize(candidate);
        let ref_tokens = tokenize(groundtruth);
        let bleu = bleu_tokens(&cand_tokens, &ref_tokens, cfg);
        Ok(QualityScores {
            coverage: page_coverage(candidate, page_count)?,
            bleu,
            rouge: rouge_tokens(&cand_tokens, &ref_tokens, cfg),
            car: car(candidate, groundtruth, cfg),
            accepted: bleu >= cfg.at_threshold,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn car_anchor() {
        let cfg = MetricConfig::default();
        let v = car("hyperthyroidism", "hypothyroidism", &cfg);
        assert!((v - 13.0 / 15.0).abs() < 1e-12);
        assert!((v - 0.8667).abs() < 1e-4);
        assert_eq!(car("", "", &cfg), 1.0);
        assert_eq!(car("", "abc", &cfg), 0.0);
        assert_eq!(car("same", "same", &cfg), 1.0);
    }

    #[test]
    fn car_switches_to_band_on_long_text() {
        let cfg = MetricConfig { car_band_width: 2, ..MetricConfig::default() };
        let a = "abcdefghijklmnopqrstuvwxyz";
        let b = "bcdefghijklmnopqrstuvwxyza";
        let exact = MetricConfig { car_band_width: 1000, ..MetricConfig::default() };
        assert!(car(a, b, &cfg) <= car(a, b, &exact));
    }

    #[test]
    fn tokenizer_is_idempotent() {
        let t = tokenize("Hello, World! pH=7.4 \\alpha{x}");
        assert_eq!(t, vec!["hello", "world", "ph74", "alphax"]);
        assert_eq!(tokenize(&t.join(" ")), t);
    }

    #[test]
    fn config_validation() {
        assert!(MetricConfig::default().validate().is_ok());
        let bad = MetricConfig { bleu_max_ngram: 9, ..MetricConfig::default() };
        assert!(bad.validate().is_err());
        let bad = MetricConfig { at_threshold: 1.5, ..MetricConfig::default() };
        assert!(bad.validate().is_err());
        let bad = MetricConfig { car_band_width: 0, ..MetricConfig::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn quality_scores_on_identity() {
        let text = format!("first page words here{PAGE_BREAK}second page words");
        let q = QualityScores::compute(&text, &text, 2, &MetricConfig::default()).unwrap();
        assert_eq!(q.coverage, 1.0);
        assert_eq!(q.bleu, 1.0);
        assert_eq!(q.rouge, 1.0);
        assert_eq!(q.car, 1.0);
        assert!(q.accepted);
    }
}
