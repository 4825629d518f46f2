//! Three-step predictor training: accuracy regression, preference
//! post-training, and a final low learning-rate regression on document targets.

mod data;
mod dpo;
mod metadata;
mod optim;
pub mod planted;
mod recipe;
mod regression;

use serde::{Deserialize, Serialize};

pub use data::{document_examples, escalation_labels, page_examples, pairs_from_records, simulated_preferences};
pub use dpo::{
    dpo_gradients, dpo_loss, dpo_loss_from_scores, dpo_loss_with_form, mean_dpo_loss, ranking_accuracy, DpoForm,
    PreferencePair,
};
pub use metadata::{cls2_accuracy, train_cls2, LogisticConfig};
pub use optim::{Gradients, Optimizer};
pub use recipe::{document_examples_from, train_from_corpus, CorpusModels, CorpusTrainConfig};
pub use regression::{mean_r_squared, r_squared, regression_gradients, regression_loss, RegressionExample};

use crate::selector::PredictorModel;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lr_stage1: f64,
    pub lr_dpo: f64,
    pub lr_stage3: f64,
    pub dpo_beta: f64,
    pub dpo_form: DpoForm,
    pub epochs_stage1: usize,
    pub epochs_dpo: usize,
    pub epochs_stage3: usize,
    pub batch_size: usize,
    pub optimizer: Optimizer,
    /// Decoupled decay applied to the trained weights at every step.
    pub weight_decay: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr_stage1: 1e-2,
            lr_dpo: 1e-3,
            lr_stage3: 1e-3,
            dpo_beta: 0.1,
            dpo_form: DpoForm::Standard,
            epochs_stage1: 40,
            epochs_dpo: 15,
            epochs_stage3: 10,
            batch_size: 32,
            optimizer: Optimizer::Adam,
            weight_decay: 0.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dpo_beta > 0.0) {
            return Err(Error::Config(format!("dpo_beta must be positive, got {}", self.dpo_beta)));
        }
        if !(self.lr_stage1 > 0.0 && self.lr_dpo >= 0.0 && self.lr_stage3 >= 0.0) {
            return Err(Error::Config("learning rates must be non-negative, stage 1 positive".into()));
        }
        if self.lr_stage3 >= self.lr_stage1 {
            return Err(Error::Config(format!(
                "final learning rate {} must be below the first-stage rate {}",
                self.lr_stage3, self.lr_stage1
            )));
        }
        if !(self.weight_decay >= 0.0) {
            return Err(Error::Config("weight_decay must be non-negative".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        Ok(())
    }
}

/// Loss before each epoch and after the last.
pub type LossHistory = Vec<f64>;

/// Step one: fits encoder and accuracy head. The result carries stage tag 1.
pub fn train_regression(model: &PredictorModel, data: &[RegressionExample], cfg: &TrainConfig) -> Result<PredictorModel> {
    train_regression_with_history(model, data, cfg).map(|(m, _)| m)
}

pub fn train_regression_with_history(
    model: &PredictorModel,
    data: &[RegressionExample],
    cfg: &TrainConfig,
) -> Result<(PredictorModel, LossHistory)> {
    let (mut out, history) = regression::fit(model, data, cfg.lr_stage1, cfg.epochs_stage1, cfg, 1)?;
    out.stage = 1;
    Ok((out, history))
}

/// Step two: preference post-training of encoder and preference head
/// against a frozen copy of the stage-one model.
pub fn train_dpo(model: &PredictorModel, pairs: &[PreferencePair], cfg: &TrainConfig) -> Result<PredictorModel> {
    train_dpo_with_history(model, pairs, cfg).map(|(m, _)| m)
}

pub fn train_dpo_with_history(
    model: &PredictorModel,
    pairs: &[PreferencePair],
    cfg: &TrainConfig,
) -> Result<(PredictorModel, LossHistory)> {
    if model.stage != 1 {
        return Err(Error::StageOrder { expected: 1, found: model.stage });
    }
    if !(cfg.dpo_beta > 0.0) {
        return Err(Error::Config(format!("dpo_beta must be positive, got {}", cfg.dpo_beta)));
    }
    let (mut out, history) = dpo::fit(model, pairs, cfg)?;
    out.stage = 2;
    Ok((out, history))
}

/// Step three: regression at the lowered learning rate on document targets.
pub fn train_final(model: &PredictorModel, data: &[RegressionExample], cfg: &TrainConfig) -> Result<PredictorModel> {
    if model.stage != 2 {
        return Err(Error::StageOrder { expected: 2, found: model.stage });
    }
    if cfg.lr_stage3 >= cfg.lr_stage1 {
        return Err(Error::Config(format!(
            "final learning rate {} must be below the first-stage rate {}",
            cfg.lr_stage3, cfg.lr_stage1
        )));
    }
    let (mut out, _) = regression::fit(model, data, cfg.lr_stage3, cfg.epochs_stage3, cfg, 3)?;
    out.stage = 3;
    Ok(out)
}

/// All three models of a pipeline run.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub stage1: PredictorModel,
    pub stage2: PredictorModel,
    pub stage3: PredictorModel,
}

pub fn train_pipeline(
    init: &PredictorModel,
    page_data: &[RegressionExample],
    pairs: &[PreferencePair],
    doc_data: &[RegressionExample],
    cfg: &TrainConfig,
) -> Result<PipelineOutput> {
    cfg.validate()?;
    let stage1 = train_regression(init, page_data, cfg).map_err(|e| e.context("stage 1"))?;
    let stage2 = train_dpo(&stage1, pairs, cfg).map_err(|e| e.context("stage 2"))?;
    let stage3 = train_final(&stage2, doc_data, cfg).map_err(|e| e.context("stage 3"))?;
    Ok(PipelineOutput { stage1, stage2, stage3 })
}
