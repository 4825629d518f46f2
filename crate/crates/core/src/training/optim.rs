use serde::{Deserialize, Serialize};

use crate::selector::PredictorModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    Adam,
    Sgd,
}

/// Which parameter groups a stage updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Part {
    /// Encoder and accuracy head.
    Regression,
    /// Encoder and preference head.
    Preference,
}

/// Gradient of a loss with the same layout as [`PredictorModel`]'s weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub embedding: Vec<f64>,
    pub head_weights: Vec<f64>,
    pub head_bias: Vec<f64>,
    pub pref_weights: Vec<f64>,
    pub pref_bias: f64,
}

impl Gradients {
    pub fn zeros(model: &PredictorModel) -> Self {
        Gradients {
            embedding: vec![0.0; model.embedding.len()],
            head_weights: vec![0.0; model.head_weights.len()],
            head_bias: vec![0.0; model.head_bias.len()],
            pref_weights: vec![0.0; model.pref_weights.len()],
            pref_bias: 0.0,
        }
    }

    pub(crate) fn clear(&mut self) {
        for g in [&mut self.embedding, &mut self.head_weights, &mut self.head_bias, &mut self.pref_weights] {
            g.iter_mut().for_each(|v| *v = 0.0);
        }
        self.pref_bias = 0.0;
    }

    pub(crate) fn scale(&mut self, f: f64) {
        for g in [&mut self.embedding, &mut self.head_weights, &mut self.head_bias, &mut self.pref_weights] {
            g.iter_mut().for_each(|v| *v *= f);
        }
        self.pref_bias *= f;
    }

    /// Adds `dh / count` to the embedding rows of `buckets`.
    pub(crate) fn add_embedding(&mut self, buckets: &[u32], dh: &[f64]) {
        if buckets.is_empty() {
            return;
        }
        let dim = dh.len();
        let inv = 1.0 / buckets.len() as f64;
        for &b in buckets {
            let row = &mut self.embedding[b as usize * dim..(b as usize + 1) * dim];
            for (g, d) in row.iter_mut().zip(dh) {
                *g += d * inv;
            }
        }
    }

    fn slices(&self, part: Part) -> [&[f64]; 3] {
        match part {
            Part::Regression => [&self.embedding, &self.head_weights, &self.head_bias],
            Part::Preference => [&self.embedding, &self.pref_weights, std::slice::from_ref(&self.pref_bias)],
        }
    }
}

fn param_slices(model: &mut PredictorModel, part: Part) -> [&mut [f64]; 3] {
    match part {
        Part::Regression => [&mut model.embedding, &mut model.head_weights, &mut model.head_bias],
        Part::Preference => [
            &mut model.embedding,
            &mut model.pref_weights,
            std::slice::from_mut(&mut model.pref_bias),
        ],
    }
}

pub(crate) struct Stepper {
    kind: Optimizer,
    lr: f64,
    decay: f64,
    part: Part,
    t: i32,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

impl Stepper {
    pub(crate) fn new(kind: Optimizer, lr: f64, decay: f64, part: Part, model: &PredictorModel) -> Self {
        let g = Gradients::zeros(model);
        let shapes: Vec<Vec<f64>> = g.slices(part).iter().map(|s| vec![0.0; s.len()]).collect();
        Stepper { kind, lr, decay, part, t: 0, m: shapes.clone(), v: shapes }
    }

    pub(crate) fn step(&mut self, model: &mut PredictorModel, grads: &Gradients) {
        if self.lr == 0.0 {
            return;
        }
        self.t += 1;
        let bc1 = 1.0 - BETA1.powi(self.t);
        let bc2 = 1.0 - BETA2.powi(self.t);
        let gs = grads.slices(self.part);
        for (k, params) in param_slices(model, self.part).into_iter().enumerate() {
            let g = gs[k];
            if self.decay > 0.0 {
                let shrink = 1.0 - self.lr * self.decay;
                params.iter_mut().for_each(|p| *p *= shrink);
            }
            match self.kind {
                Optimizer::Sgd => {
                    for (p, d) in params.iter_mut().zip(g) {
                        *p -= self.lr * d;
                    }
                }
                Optimizer::Adam => {
                    let (m, v) = (&mut self.m[k], &mut self.v[k]);
                    for i in 0..params.len() {
                        let d = g[i];
                        if d == 0.0 && m[i] == 0.0 && v[i] == 0.0 {
                            continue;
                        }
                        m[i] = BETA1 * m[i] + (1.0 - BETA1) * d;
                        v[i] = BETA2 * v[i] + (1.0 - BETA2) * d * d;
                        params[i] -= self.lr * (m[i] / bc1) / ((v[i] / bc2).sqrt() + EPS);
                    }
                }
            }
        }
    }
}
