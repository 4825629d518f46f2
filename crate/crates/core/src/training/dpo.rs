use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::optim::{Gradients, Part, Stepper};
use super::TrainConfig;
use crate::hash::mix;
use crate::selector::{sigmoid, PredictorModel};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreferencePair {
    pub page_id: String,
    pub preferred: String,
    pub rejected: String,
}

impl PreferencePair {
    pub fn new(page_id: impl Into<String>, preferred: impl Into<String>, rejected: impl Into<String>) -> Self {
        PreferencePair { page_id: page_id.into(), preferred: preferred.into(), rejected: rejected.into() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.preferred == self.rejected {
            return Err(Error::Precondition(format!("pair {} has identical texts", self.page_id)));
        }
        Ok(())
    }
}

/// How the temperature enters the loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DpoForm {
    /// `beta` scales the difference of the two log-ratios.
    #[default]
    Standard,
    /// `beta` scales only the preferred log-ratio.
    Printed,
}

impl DpoForm {
    fn coefficients(self, beta: f64) -> (f64, f64) {
        match self {
            DpoForm::Standard => (beta, beta),
            DpoForm::Printed => (beta, 1.0),
        }
    }
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn log_sigmoid(s: f64) -> f64 {
    -softplus(-s)
}

/// `-log sigma(beta * [(log g+ - log g+_ref) - (log g- - log g-_ref)])` from raw scores.
pub fn dpo_loss_from_scores(g_pos: f64, g_pos_ref: f64, g_neg: f64, g_neg_ref: f64, beta: f64) -> Result<f64> {
    if beta <= 0.0 {
        return Err(Error::Config(format!("dpo beta must be positive, got {beta}")));
    }
    for g in [g_pos, g_pos_ref, g_neg, g_neg_ref] {
        if !(g > 0.0) {
            return Err(Error::Precondition(format!("preference score {g} is not positive")));
        }
    }
    let margin = (g_pos.ln() - g_pos_ref.ln()) - (g_neg.ln() - g_neg_ref.ln());
    Ok(softplus(-beta * margin))
}

fn pref_logit(model: &PredictorModel, h: &[f64]) -> f64 {
    model.pref_bias + model.pref_weights.iter().zip(h).map(|(w, x)| w * x).sum::<f64>()
}

/// Log preference score of `text`; errors if the score underflows to zero.
fn log_score(model: &PredictorModel, text: &str) -> Result<f64> {
    let s = pref_logit(model, &model.encode(text));
    if !(sigmoid(s) > 0.0) {
        return Err(Error::Precondition(format!("preference score underflowed at logit {s}")));
    }
    Ok(log_sigmoid(s))
}

pub fn dpo_loss(model: &PredictorModel, reference: &PredictorModel, pair: &PreferencePair, beta: f64) -> Result<f64> {
    dpo_loss_with_form(model, reference, pair, beta, DpoForm::Standard)
}

pub fn dpo_loss_with_form(
    model: &PredictorModel,
    reference: &PredictorModel,
    pair: &PreferencePair,
    beta: f64,
    form: DpoForm,
) -> Result<f64> {
    if beta <= 0.0 {
        return Err(Error::Config(format!("dpo beta must be positive, got {beta}")));
    }
    let (cp, cn) = form.coefficients(beta);
    let z = cp * (log_score(model, &pair.preferred)? - log_score(reference, &pair.preferred)?)
        - cn * (log_score(model, &pair.rejected)? - log_score(reference, &pair.rejected)?);
    Ok(softplus(-z))
}

pub fn mean_dpo_loss(model: &PredictorModel, reference: &PredictorModel, pairs: &[PreferencePair], cfg: &TrainConfig) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::InsufficientData("no preference pairs".into()));
    }
    let mut total = 0.0;
    for p in pairs {
        total += dpo_loss_with_form(model, reference, p, cfg.dpo_beta, cfg.dpo_form)?;
    }
    Ok(total / pairs.len() as f64)
}

struct EncodedPair {
    pos: Vec<u32>,
    neg: Vec<u32>,
    ref_pos: f64,
    ref_neg: f64,
}

fn encode_pairs(reference: &PredictorModel, pairs: &[PreferencePair]) -> Result<Vec<EncodedPair>> {
    pairs
        .iter()
        .map(|p| {
            Ok(EncodedPair {
                pos: reference.buckets(&p.preferred),
                neg: reference.buckets(&p.rejected),
                ref_pos: log_score(reference, &p.preferred)?,
                ref_neg: log_score(reference, &p.rejected)?,
            })
        })
        .collect()
}

fn accumulate(model: &PredictorModel, pairs: &[EncodedPair], idx: &[usize], beta: f64, form: DpoForm, g: &mut Gradients) -> f64 {
    let (cp, cn) = form.coefficients(beta);
    let mut loss = 0.0;
    for &i in idx {
        let p = &pairs[i];
        let hp = model.encode_buckets(&p.pos);
        let hn = model.encode_buckets(&p.neg);
        let (sp, sn) = (pref_logit(model, &hp), pref_logit(model, &hn));
        let z = cp * (log_sigmoid(sp) - p.ref_pos) - cn * (log_sigmoid(sn) - p.ref_neg);
        loss += softplus(-z);
        let dz = -sigmoid(-z);
        let dsp = dz * cp * (1.0 - sigmoid(sp));
        let dsn = -dz * cn * (1.0 - sigmoid(sn));
        g.pref_bias += dsp + dsn;
        for k in 0..hp.len() {
            g.pref_weights[k] += dsp * hp[k] + dsn * hn[k];
        }
        let dhp: Vec<f64> = model.pref_weights.iter().map(|w| dsp * w).collect();
        let dhn: Vec<f64> = model.pref_weights.iter().map(|w| dsn * w).collect();
        g.add_embedding(&p.pos, &dhp);
        g.add_embedding(&p.neg, &dhn);
    }
    loss
}

/// Analytic gradient of the mean DPO loss over `pairs`.
pub fn dpo_gradients(
    model: &PredictorModel,
    reference: &PredictorModel,
    pairs: &[PreferencePair],
    beta: f64,
    form: DpoForm,
) -> Result<Gradients> {
    let encoded = encode_pairs(reference, pairs)?;
    let mut g = Gradients::zeros(model);
    let idx: Vec<usize> = (0..pairs.len()).collect();
    accumulate(model, &encoded, &idx, beta, form, &mut g);
    if !pairs.is_empty() {
        g.scale(1.0 / pairs.len() as f64);
    }
    Ok(g)
}

/// Fraction of pairs whose preferred text scores strictly higher.
pub fn ranking_accuracy(model: &PredictorModel, pairs: &[PreferencePair]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::InsufficientData("no preference pairs".into()));
    }
    let wins = pairs
        .iter()
        .filter(|p| model.preference_score(&p.preferred) > model.preference_score(&p.rejected))
        .count();
    Ok(wins as f64 / pairs.len() as f64)
}

pub(crate) fn fit(model: &PredictorModel, pairs: &[PreferencePair], cfg: &TrainConfig) -> Result<(PredictorModel, Vec<f64>)> {
    if pairs.is_empty() {
        return Err(Error::InsufficientData("no preference pairs".into()));
    }
    for p in pairs {
        p.validate()?;
    }
    let reference = model.clone();
    let encoded = encode_pairs(&reference, pairs)?;
    let mut model = model.clone();
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(mix(cfg.seed, 2));
    let mut stepper = Stepper::new(cfg.optimizer, cfg.lr_dpo, cfg.weight_decay, Part::Preference, &model);
    let mut g = Gradients::zeros(&model);
    let mut history = Vec::with_capacity(cfg.epochs_dpo + 1);
    for _ in 0..cfg.epochs_dpo {
        history.push(mean_dpo_loss(&model, &reference, pairs, cfg)?);
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size.max(1)) {
            g.clear();
            accumulate(&model, &encoded, chunk, cfg.dpo_beta, cfg.dpo_form, &mut g);
            g.scale(1.0 / chunk.len() as f64);
            stepper.step(&mut model, &g);
        }
    }
    history.push(mean_dpo_loss(&model, &reference, pairs, cfg)?);
    Ok((model, history))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_values() {
        let ln2 = std::f64::consts::LN_2;
        assert!((dpo_loss_from_scores(0.3, 0.3, 0.7, 0.7, 5.0).unwrap() - ln2).abs() < 1e-12);
        let v = dpo_loss_from_scores(0.5, 0.25, 0.4, 0.4, 1.0).unwrap();
        assert!((v - 1.5f64.ln()).abs() < 1e-12, "{v}");
        assert!(dpo_loss_from_scores(0.999999, 1e-9, 1e-9, 0.999999, 1.0).unwrap() < 1e-9);
    }

    #[test]
    fn nonpositive_scores_are_rejected() {
        assert!(matches!(dpo_loss_from_scores(0.0, 0.5, 0.5, 0.5, 1.0), Err(Error::Precondition(_))));
        assert!(matches!(dpo_loss_from_scores(0.5, 0.5, -0.1, 0.5, 1.0), Err(Error::Precondition(_))));
        assert!(dpo_loss_from_scores(0.5, 0.5, 0.5, 0.5, 0.0).is_err());
    }

    #[test]
    fn printed_form_differs_only_off_unit_beta() {
        let s = |b, f| {
            let (cp, cn) = DpoForm::coefficients(f, b);
            cp * 0.3 - cn * 0.1
        };
        assert_eq!(s(1.0, DpoForm::Standard), s(1.0, DpoForm::Printed));
        assert_ne!(s(0.1, DpoForm::Standard), s(0.1, DpoForm::Printed));
    }
}
