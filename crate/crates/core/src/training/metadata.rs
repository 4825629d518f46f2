use serde::{Deserialize, Serialize};

use crate::corpus::DocumentMetadata;
use crate::selector::{sigmoid, MetadataClassifier, MetadataVocab};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticConfig {
    pub lr: f64,
    pub epochs: usize,
    pub l2: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        LogisticConfig { lr: 0.1, epochs: 400, l2: 1e-4 }
    }
}

/// Full-batch Adam on the mean logistic loss; deterministic.
pub fn train_cls2(examples: &[(DocumentMetadata, bool)], cfg: &LogisticConfig) -> Result<MetadataClassifier> {
    if examples.is_empty() {
        return Err(Error::InsufficientData("no labelled metadata".into()));
    }
    let vocab = MetadataVocab::build(examples.iter().map(|(m, _)| m));
    let xs: Vec<Vec<f64>> = examples.iter().map(|(m, _)| vocab.features(m)).collect();
    let mut model = MetadataClassifier::zeros(vocab);
    let dim = model.weights.len();
    let n = examples.len() as f64;
    let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8);
    let mut m = vec![0.0; dim + 1];
    let mut v = vec![0.0; dim + 1];
    for t in 1..=cfg.epochs {
        let mut grad = vec![0.0; dim + 1];
        for (x, (_, y)) in xs.iter().zip(examples) {
            let z = model.bias + x.iter().zip(&model.weights).map(|(a, w)| a * w).sum::<f64>();
            let r = sigmoid(z) - if *y { 1.0 } else { 0.0 };
            for (g, a) in grad.iter_mut().zip(x) {
                *g += r * a;
            }
            grad[dim] += r;
        }
        for (i, g) in grad.iter_mut().enumerate() {
            *g /= n;
            if i < dim {
                *g += cfg.l2 * model.weights[i];
            }
        }
        let (bc1, bc2) = (1.0 - b1.powi(t as i32), 1.0 - b2.powi(t as i32));
        for i in 0..=dim {
            m[i] = b1 * m[i] + (1.0 - b1) * grad[i];
            v[i] = b2 * v[i] + (1.0 - b2) * grad[i] * grad[i];
            let step = cfg.lr * (m[i] / bc1) / ((v[i] / bc2).sqrt() + eps);
            if i < dim {
                model.weights[i] -= step;
            } else {
                model.bias -= step;
            }
        }
    }
    Ok(model)
}

pub fn cls2_accuracy(model: &MetadataClassifier, examples: &[(DocumentMetadata, bool)]) -> f64 {
    if examples.is_empty() {
        return 0.0;
    }
    let hits = examples.iter().filter(|(m, y)| (model.score(m) > 0.5) == *y).count();
    hits as f64 / examples.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{synth_corpus, SynthProfile};

    #[test]
    fn learns_year_rule_on_held_out_docs() {
        let docs = synth_corpus(600, &SynthProfile::compact(), 5).unwrap();
        let labelled: Vec<_> = docs.iter().map(|d| (d.metadata.clone(), d.metadata.year < 2000)).collect();
        assert!(labelled.iter().any(|(_, y)| *y));
        let (train, test) = labelled.split_at(400);
        let model = train_cls2(train, &LogisticConfig::default()).unwrap();
        let acc = cls2_accuracy(&model, test);
        assert!(acc >= 0.9, "held-out accuracy {acc}");
    }

    #[test]
    fn empty_is_an_error() {
        assert!(train_cls2(&[], &LogisticConfig::default()).is_err());
    }
}
