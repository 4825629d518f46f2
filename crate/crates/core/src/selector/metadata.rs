//! Logistic classifier over document metadata: is a better parse likely?

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::DocumentMetadata;

pub const CATEGORICAL_FIELDS: [&str; 4] = ["authoring_tool", "publisher", "category", "format_version"];
const NUMERIC_FEATURES: usize = 2;

fn field_value<'a>(meta: &'a DocumentMetadata, field: &str) -> &'a str {
    match field {
        "authoring_tool" => &meta.authoring_tool,
        "publisher" => &meta.publisher,
        "category" => &meta.category,
        "format_version" => &meta.format_version,
        _ => unreachable!("unknown metadata field {field}"),
    }
}

/// Feature layout: for each categorical field, one slot per known value plus
/// one out-of-vocabulary slot; then scaled year and log page count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetadataVocab {
    fields: Vec<BTreeMap<String, usize>>,
    offsets: Vec<usize>,
    dim: usize,
}

impl MetadataVocab {
    pub fn build<'a, I: IntoIterator<Item = &'a DocumentMetadata>>(metas: I) -> Self {
        let mut values: Vec<std::collections::BTreeSet<String>> = vec![Default::default(); CATEGORICAL_FIELDS.len()];
        for m in metas {
            for (i, f) in CATEGORICAL_FIELDS.iter().enumerate() {
                values[i].insert(field_value(m, f).to_owned());
            }
        }
        let mut fields = Vec::new();
        let mut offsets = Vec::new();
        let mut dim = 0;
        for set in values {
            offsets.push(dim);
            let map: BTreeMap<String, usize> = set.into_iter().enumerate().map(|(i, v)| (v, i)).collect();
            dim += map.len() + 1;
            fields.push(map);
        }
        MetadataVocab { fields, offsets, dim: dim + NUMERIC_FEATURES }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Index of a categorical value's slot; `None` for unknown fields.
    pub fn slot(&self, field: &str, value: &str) -> Option<usize> {
        let i = CATEGORICAL_FIELDS.iter().position(|f| *f == field)?;
        let map = &self.fields[i];
        Some(self.offsets[i] + map.get(value).copied().unwrap_or(map.len()))
    }

    pub fn features(&self, meta: &DocumentMetadata) -> Vec<f64> {
        let mut x = vec![0.0; self.dim];
        for f in CATEGORICAL_FIELDS {
            let slot = self.slot(f, field_value(meta, f)).expect("known field");
            x[slot] = 1.0;
        }
        x[self.dim - 2] = (meta.year as f64 - 2000.0) / 25.0;
        x[self.dim - 1] = (1.0 + meta.page_count as f64).ln() / 3.0;
        x
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetadataClassifier {
    pub vocab: MetadataVocab,
    pub weights: Vec<f64>,
    pub bias: f64,
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl MetadataClassifier {
    pub fn zeros(vocab: MetadataVocab) -> Self {
        let dim = vocab.dim();
        MetadataClassifier { vocab, weights: vec![0.0; dim], bias: 0.0 }
    }

    pub fn set_weight(&mut self, field: &str, value: &str, weight: f64) {
        if let Some(slot) = self.vocab.slot(field, value) {
            self.weights[slot] = weight;
        }
    }

    pub fn score(&self, meta: &DocumentMetadata) -> f64 {
        let x = self.vocab.features(meta);
        sigmoid(self.bias + x.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>())
    }
}

/// Second-stage check: does the metadata suggest another parser would do better?
pub fn cls2_improvement(meta: &DocumentMetadata, model: &MetadataClassifier) -> bool {
    model.score(meta) > 0.5
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta(tool: &str) -> DocumentMetadata {
        DocumentMetadata {
            authoring_tool: tool.into(),
            year: 1990,
            page_count: 3,
            publisher: "acme".into(),
            category: "physics".into(),
            format_version: "1.4".into(),
        }
    }

    #[test]
    fn zero_model_never_escalates() {
        let vocab = MetadataVocab::build([&meta("pdflatex"), &meta("legacy-ocr")]);
        let model = MetadataClassifier::zeros(vocab);
        assert_eq!(model.score(&meta("pdflatex")), 0.5);
        assert!(!cls2_improvement(&meta("pdflatex"), &model));
        assert!(!cls2_improvement(&meta("never-seen"), &model));
    }

    #[test]
    fn weighted_tool_escalates() {
        let vocab = MetadataVocab::build([&meta("pdflatex"), &meta("legacy-ocr")]);
        let mut model = MetadataClassifier::zeros(vocab);
        model.set_weight("authoring_tool", "legacy-ocr", 10.0);
        assert!(cls2_improvement(&meta("legacy-ocr"), &model));
        assert!(!cls2_improvement(&meta("pdflatex"), &model));
    }

    #[test]
    fn unseen_values_share_the_oov_slot() {
        let vocab = MetadataVocab::build([&meta("pdflatex")]);
        assert_eq!(vocab.slot("authoring_tool", "x"), vocab.slot("authoring_tool", "y"));
        assert_ne!(vocab.slot("authoring_tool", "x"), vocab.slot("authoring_tool", "pdflatex"));
        let x = vocab.features(&meta("brand-new"));
        assert_eq!(x.iter().filter(|v| **v == 1.0).count(), 4);
    }
}
