use serde::{Deserialize, Serialize};

use crate::parsers::ParserSet;
use crate::selector::{heavy_cap, select_heavy, Candidate, RouteStage, RoutingDecision};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchPlan {
    pub batch_id: usize,
    pub assignments: Vec<(String, String)>,
    pub heavy_count: usize,
    /// `floor(alpha * k)` for this batch.
    pub cap: usize,
    /// Sum of predicted accuracy of the chosen parsers, when predictions exist.
    pub expected_accuracy: Option<f64>,
}

impl BatchPlan {
    pub fn k(&self) -> usize {
        self.assignments.len()
    }

    pub fn check(&self) -> Result<()> {
        if self.heavy_count > self.cap {
            return Err(Error::Precondition(format!(
                "batch {} routes {} docs to the heavy parser, cap is {}",
                self.batch_id, self.heavy_count, self.cap
            )));
        }
        Ok(())
    }
}

/// Caps the heavy routings in `decisions` at `floor(alpha * k)`, keeping
/// invalid extractions first and then the highest priorities, and returns the
/// plan. Decisions dropped from the heavy parser are rewritten in place to
/// the default parser.
pub fn plan_batch(batch_id: usize, decisions: &mut [RoutingDecision], alpha: f64, parsers: &ParserSet) -> Result<BatchPlan> {
    if decisions.is_empty() {
        return Err(Error::Precondition(format!("batch {batch_id} is empty")));
    }
    let cap = heavy_cap(alpha, decisions.len())?;
    let heavy_id = parsers.heavy_parser().parser_id.clone();
    let default_id = parsers.default_parser().parser_id.clone();
    let candidates: Vec<Candidate> = decisions
        .iter()
        .map(|d| Candidate {
            doc_id: &d.doc_id,
            forced: d.chosen_parser == heavy_id && d.stage == RouteStage::Cls1Invalid,
            priority: if d.chosen_parser == heavy_id { d.priority.max(f64::MIN_POSITIVE) } else { 0.0 },
        })
        .collect();
    let keep = select_heavy(&candidates, cap);
    let mut expected = Some(0.0);
    let mut heavy_count = 0;
    let mut assignments = Vec::with_capacity(decisions.len());
    for (d, is_heavy) in decisions.iter_mut().zip(keep) {
        if d.chosen_parser == heavy_id && !is_heavy {
            d.chosen_parser = default_id.clone();
        }
        heavy_count += usize::from(d.chosen_parser == heavy_id);
        let idx = parsers.index_of(&d.chosen_parser)?;
        expected = match (expected, d.predicted_accuracy.get(idx)) {
            (Some(sum), Some(p)) => Some(sum + p),
            _ => None,
        };
        assignments.push((d.doc_id.clone(), d.chosen_parser.clone()));
    }
    let plan = BatchPlan { batch_id, assignments, heavy_count, cap, expected_accuracy: expected };
    plan.check()?;
    Ok(plan)
}

/// Plans a batch straight from per-doc predicted accuracy vectors.
pub fn plan_predictions(
    batch_id: usize,
    predictions: &[(String, Vec<f64>)],
    alpha: f64,
    parsers: &ParserSet,
) -> Result<BatchPlan> {
    let (d, h) = (parsers.default_index(), parsers.heavy_index());
    let heavy_id = &parsers.heavy_parser().parser_id;
    let mut decisions: Vec<RoutingDecision> = predictions
        .iter()
        .map(|(id, p)| {
            if p.len() != parsers.len() {
                return Err(Error::DimensionMismatch { expected: parsers.len(), got: p.len() });
            }
            let p: Vec<f64> = p.iter().map(|v| v.clamp(0.0, 1.0)).collect();
            let gain = p[h] - p[d];
            Ok(RoutingDecision {
                doc_id: id.clone(),
                chosen_parser: if gain > 0.0 { heavy_id.clone() } else { parsers.default_parser().parser_id.clone() },
                predicted_accuracy: p,
                stage: RouteStage::Cls3Routed,
                priority: gain,
            })
        })
        .collect::<Result<_>>()?;
    plan_batch(batch_id, &mut decisions, alpha, parsers)
}
