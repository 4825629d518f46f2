use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::optim::{Gradients, Part, Stepper};
use super::TrainConfig;
use crate::hash::mix;
use crate::selector::PredictorModel;
use crate::{Error, Result};

/// First-page (or page) text of the default parser and the per-parser accuracy on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionExample {
    pub text: String,
    pub targets: Vec<f64>,
}

impl RegressionExample {
    pub fn new(text: impl Into<String>, targets: Vec<f64>) -> Self {
        RegressionExample { text: text.into(), targets }
    }
}

pub(crate) fn check_examples(model: &PredictorModel, data: &[RegressionExample]) -> Result<()> {
    if data.is_empty() {
        return Err(Error::InsufficientData("no regression examples".into()));
    }
    for ex in data {
        if ex.targets.len() != model.m() {
            return Err(Error::DimensionMismatch { expected: model.m(), got: ex.targets.len() });
        }
        if ex.targets.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return Err(Error::Precondition(format!("targets outside [0, 1]: {:?}", ex.targets)));
        }
    }
    Ok(())
}

/// Adds the gradient of `sum_i ||head(enc(x_i)) - y_i||^2` over `idx` to `g`
/// and returns that sum.
fn accumulate(model: &PredictorModel, buckets: &[Vec<u32>], data: &[RegressionExample], idx: &[usize], g: &mut Gradients) -> f64 {
    let dim = model.dim();
    let mut loss = 0.0;
    let mut dh = vec![0.0; dim];
    for &i in idx {
        let h = model.encode_buckets(&buckets[i]);
        let pred = model.head(&h);
        dh.iter_mut().for_each(|v| *v = 0.0);
        for (j, (p, y)) in pred.iter().zip(&data[i].targets).enumerate() {
            let r = p - y;
            loss += r * r;
            let row = &model.head_weights[j * dim..(j + 1) * dim];
            g.head_bias[j] += 2.0 * r;
            for k in 0..dim {
                g.head_weights[j * dim + k] += 2.0 * r * h[k];
                dh[k] += 2.0 * r * row[k];
            }
        }
        g.add_embedding(&buckets[i], &dh);
    }
    loss
}

/// Mean squared-error loss over `data`, unclamped.
pub fn regression_loss(model: &PredictorModel, data: &[RegressionExample]) -> f64 {
    if data.is_empty() {
        return 0.0;
    }
    let total: f64 = data
        .iter()
        .map(|ex| {
            let pred = model.head(&model.encode(&ex.text));
            pred.iter().zip(&ex.targets).map(|(p, y)| (p - y) * (p - y)).sum::<f64>()
        })
        .sum();
    total / data.len() as f64
}

/// Analytic gradient of [`regression_loss`].
pub fn regression_gradients(model: &PredictorModel, data: &[RegressionExample]) -> Gradients {
    let buckets: Vec<Vec<u32>> = data.iter().map(|ex| model.buckets(&ex.text)).collect();
    let idx: Vec<usize> = (0..data.len()).collect();
    let mut g = Gradients::zeros(model);
    accumulate(model, &buckets, data, &idx, &mut g);
    if !data.is_empty() {
        g.scale(1.0 / data.len() as f64);
    }
    g
}

/// Minibatch regression of the encoder and accuracy head. Returns the model
/// and the training loss measured before each epoch and after the last one.
pub(crate) fn fit(
    model: &PredictorModel,
    data: &[RegressionExample],
    lr: f64,
    epochs: usize,
    cfg: &TrainConfig,
    salt: u64,
) -> Result<(PredictorModel, Vec<f64>)> {
    check_examples(model, data)?;
    let mut model = model.clone();
    let buckets: Vec<Vec<u32>> = data.iter().map(|ex| model.buckets(&ex.text)).collect();
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(mix(cfg.seed, salt));
    let mut stepper = Stepper::new(cfg.optimizer, lr, cfg.weight_decay, Part::Regression, &model);
    let mut g = Gradients::zeros(&model);
    let batch = cfg.batch_size.max(1);
    let mut history = Vec::with_capacity(epochs + 1);
    for _ in 0..epochs {
        history.push(regression_loss(&model, data));
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch) {
            g.clear();
            accumulate(&model, &buckets, data, chunk, &mut g);
            g.scale(1.0 / chunk.len() as f64);
            stepper.step(&mut model, &g);
        }
    }
    history.push(regression_loss(&model, data));
    Ok((model, history))
}

/// Per-output coefficient of determination of the clamped predictions.
/// Outputs with constant targets score 0.
pub fn r_squared(model: &PredictorModel, data: &[RegressionExample]) -> Result<Vec<f64>> {
    check_examples(model, data)?;
    let preds: Vec<Vec<f64>> = data.iter().map(|ex| model.predict_accuracy(&ex.text)).collect();
    Ok((0..model.m())
        .map(|j| {
            let mean = data.iter().map(|ex| ex.targets[j]).sum::<f64>() / data.len() as f64;
            let ss_tot: f64 = data.iter().map(|ex| (ex.targets[j] - mean).powi(2)).sum();
            let ss_res: f64 = data.iter().zip(&preds).map(|(ex, p)| (ex.targets[j] - p[j]).powi(2)).sum();
            if ss_tot == 0.0 {
                0.0
            } else {
                1.0 - ss_res / ss_tot
            }
        })
        .collect())
}

pub fn mean_r_squared(model: &PredictorModel, data: &[RegressionExample]) -> Result<f64> {
    let r = r_squared(model, data)?;
    Ok(r.iter().sum::<f64>() / r.len() as f64)
}
