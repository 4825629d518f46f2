use std::cmp::Ordering;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::metadata::MetadataClassifier;
use super::model::AccuracyPredictor;
use super::stats::{cls1_validity, text_stats, ValidityThresholds};
use crate::corpus::DocumentRecord;
use crate::parsers::ParserSet;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RouteStage {
    /// The cheap extraction failed the validity check.
    Cls1Invalid,
    /// Metadata says another parser is unlikely to help.
    Cls2Accept,
    /// Metadata says another parser is likely to help.
    Cls2Escalate,
    /// Chosen from predicted per-parser accuracy.
    Cls3Routed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutingDecision {
    pub doc_id: String,
    pub chosen_parser: String,
    /// One entry per parser, clamped to [0, 1]. Empty when no prediction was made.
    pub predicted_accuracy: Vec<f64>,
    pub stage: RouteStage,
    /// Ranking key for the heavy parser: predicted improvement, or the metadata
    /// classifier score for escalations.
    pub priority: f64,
}

/// A document together with its cheap first-page extraction.
#[derive(Debug, Clone)]
pub struct Probe {
    pub doc: Arc<DocumentRecord>,
    pub first_page: String,
}

impl Probe {
    pub fn new(doc: Arc<DocumentRecord>, first_page: impl Into<String>) -> Self {
        Probe { doc, first_page: first_page.into() }
    }

    pub fn doc_id(&self) -> &str {
        &self.doc.doc_id
    }
}

/// Heavy-parser slots for a batch of `k` docs.
pub fn heavy_cap(alpha: f64, k: usize) -> Result<usize> {
    check_alpha(alpha)?;
    Ok((alpha * k as f64 + 1e-9).floor() as usize)
}

pub fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Config(format!("alpha {alpha} outside [0, 1]")));
    }
    Ok(())
}

/// A heavy-parser candidate. Forced candidates take slots first; the rest
/// compete on `priority` and only when it is positive.
#[derive(Debug, Clone, Copy)]
pub struct Candidate<'a> {
    pub doc_id: &'a str,
    pub forced: bool,
    pub priority: f64,
}

/// Marks at most `cap` candidates for the heavy parser. Ties go to the
/// smaller doc id, so the result does not depend on input order.
pub fn select_heavy(candidates: &[Candidate<'_>], cap: usize) -> Vec<bool> {
    let mut order: Vec<usize> = (0..candidates.len())
        .filter(|&i| candidates[i].forced || candidates[i].priority > 0.0)
        .collect();
    order.sort_by(|&a, &b| {
        let (x, y) = (&candidates[a], &candidates[b]);
        y.forced
            .cmp(&x.forced)
            .then_with(|| {
                if x.forced {
                    Ordering::Equal
                } else {
                    y.priority.partial_cmp(&x.priority).unwrap_or(Ordering::Equal)
                }
            })
            .then_with(|| x.doc_id.cmp(y.doc_id))
    });
    let mut heavy = vec![false; candidates.len()];
    for &i in order.iter().take(cap) {
        heavy[i] = true;
    }
    heavy
}

/// Validity check plus metadata classifier; escalations go straight to the
/// heavy parser.
pub fn route_ft(
    probe: &Probe,
    thresholds: &ValidityThresholds,
    cls2: &MetadataClassifier,
    parsers: &ParserSet,
) -> RoutingDecision {
    let heavy = parsers.heavy_parser().parser_id.clone();
    let (stage, chosen, priority) = if !cls1_validity(&text_stats(&probe.first_page), thresholds) {
        (RouteStage::Cls1Invalid, heavy, 1.0)
    } else {
        let score = cls2.score(&probe.doc.metadata);
        if score > 0.5 {
            (RouteStage::Cls2Escalate, heavy, score)
        } else {
            (RouteStage::Cls2Accept, parsers.default_parser().parser_id.clone(), score)
        }
    };
    RoutingDecision {
        doc_id: probe.doc.doc_id.clone(),
        chosen_parser: chosen,
        predicted_accuracy: Vec::new(),
        stage,
        priority,
    }
}

/// Predicts accuracy for each valid doc and sends the top `floor(alpha * k)`
/// positive heavy-over-default improvements to the heavy parser, after
/// invalid extractions have taken their slots.
pub fn route_llm(
    batch: &[Probe],
    predictor: &dyn AccuracyPredictor,
    alpha: f64,
    thresholds: &ValidityThresholds,
    parsers: &ParserSet,
) -> Result<Vec<RoutingDecision>> {
    if batch.is_empty() {
        return Err(Error::Precondition("cannot route an empty batch".into()));
    }
    let cap = heavy_cap(alpha, batch.len())?;
    if predictor.outputs() != parsers.len() {
        return Err(Error::DimensionMismatch { expected: parsers.len(), got: predictor.outputs() });
    }
    let (d, h) = (parsers.default_index(), parsers.heavy_index());
    let mut decisions = Vec::with_capacity(batch.len());
    for probe in batch {
        let valid = cls1_validity(&text_stats(&probe.first_page), thresholds);
        let (stage, predicted, priority) = if valid {
            let mut p = predictor.predict(probe.doc_id(), &probe.first_page);
            if p.len() != parsers.len() {
                return Err(Error::DimensionMismatch { expected: parsers.len(), got: p.len() });
            }
            p.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
            let gain = p[h] - p[d];
            (RouteStage::Cls3Routed, p, gain)
        } else {
            (RouteStage::Cls1Invalid, Vec::new(), 1.0)
        };
        decisions.push(RoutingDecision {
            doc_id: probe.doc_id().to_owned(),
            chosen_parser: String::new(),
            predicted_accuracy: predicted,
            stage,
            priority,
        });
    }
    let candidates: Vec<Candidate> = decisions
        .iter()
        .map(|r| Candidate { doc_id: &r.doc_id, forced: r.stage == RouteStage::Cls1Invalid, priority: r.priority })
        .collect();
    let heavy = select_heavy(&candidates, cap);
    for (r, is_heavy) in decisions.iter_mut().zip(heavy) {
        let idx = if is_heavy { h } else { d };
        r.chosen_parser = parsers.parsers()[idx].parser_id.clone();
    }
    Ok(decisions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::DocumentMetadata;
    use crate::parsers::reference_parsers;
    use crate::selector::{MetadataVocab, OraclePredictor};

    fn doc(id: &str, tool: &str) -> Arc<DocumentRecord> {
        let meta = DocumentMetadata {
            authoring_tool: tool.into(),
            year: 2010,
            page_count: 1,
            publisher: "p".into(),
            category: "c".into(),
            format_version: "1.5".into(),
        };
        Arc::new(DocumentRecord::new(id, vec![CLEAN.into()], meta, Some(CLEAN.into())).unwrap())
    }

    const CLEAN: &str = "the quick brown fox jumps over the lazy dog while the committee reviews the \
        measured results of the experiment and the students record every observation in a notebook \
        so that later analysis of the data can proceed without confusion or delay in any form";

    fn oracle_with_gains(gains: &[f64]) -> (Vec<Probe>, OraclePredictor) {
        let parsers = reference_parsers();
        let mut oracle = OraclePredictor::new(parsers.len());
        let probes = gains
            .iter()
            .enumerate()
            .map(|(i, g)| {
                let id = format!("d{}", i + 1);
                let mut row = vec![0.5; parsers.len()];
                row[parsers.heavy_index()] = 0.5 + g;
                oracle.insert(id.clone(), row).unwrap();
                Probe::new(doc(&id, "pdflatex"), CLEAN)
            })
            .collect();
        (probes, oracle)
    }

    fn heavy_ids(ds: &[RoutingDecision]) -> Vec<&str> {
        let heavy = reference_parsers().heavy_parser().parser_id.clone();
        ds.iter().filter(|r| r.chosen_parser == heavy).map(|r| r.doc_id.as_str()).collect()
    }

    #[test]
    fn hand_sorted_example() {
        let (probes, oracle) = oracle_with_gains(&[0.3, 0.2, -0.1, 0.4]);
        let ds = route_llm(&probes, &oracle, 0.5, &ValidityThresholds::default(), &reference_parsers()).unwrap();
        assert_eq!(heavy_ids(&ds), vec!["d1", "d4"]);
        assert!(ds.iter().all(|r| r.stage == RouteStage::Cls3Routed));
    }

    #[test]
    fn zero_alpha_and_negative_gains_route_nothing() {
        let th = ValidityThresholds::default();
        let (probes, oracle) = oracle_with_gains(&[0.3, 0.2, 0.1, 0.4]);
        assert!(heavy_ids(&route_llm(&probes, &oracle, 0.0, &th, &reference_parsers()).unwrap()).is_empty());
        let (probes, oracle) = oracle_with_gains(&[-0.3, -0.2, -0.1, -0.4]);
        assert!(heavy_ids(&route_llm(&probes, &oracle, 1.0, &th, &reference_parsers()).unwrap()).is_empty());
    }

    #[test]
    fn alpha_out_of_range_is_config_error() {
        let (probes, oracle) = oracle_with_gains(&[0.1]);
        let th = ValidityThresholds::default();
        for a in [-0.1, 1.5, f64::NAN] {
            assert!(matches!(route_llm(&probes, &oracle, a, &th, &reference_parsers()), Err(Error::Config(_))));
        }
    }

    #[test]
    fn invalid_docs_take_slots_first() {
        let (mut probes, oracle) = oracle_with_gains(&[0.9, 0.8, 0.7, 0.6]);
        probes[3].first_page.clear();
        let ds = route_llm(&probes, &oracle, 0.5, &ValidityThresholds::default(), &reference_parsers()).unwrap();
        assert_eq!(heavy_ids(&ds), vec!["d1", "d4"]);
        assert_eq!(ds[3].stage, RouteStage::Cls1Invalid);
    }

    #[test]
    fn ties_break_by_doc_id_regardless_of_order() {
        let (mut probes, oracle) = oracle_with_gains(&[0.2, 0.2, 0.2, 0.2]);
        let th = ValidityThresholds::default();
        let a = heavy_ids(&route_llm(&probes, &oracle, 0.5, &th, &reference_parsers()).unwrap())
            .into_iter()
            .map(String::from)
            .collect::<Vec<_>>();
        probes.reverse();
        let mut b = heavy_ids(&route_llm(&probes, &oracle, 0.5, &th, &reference_parsers()).unwrap())
            .into_iter()
            .map(String::from)
            .collect::<Vec<_>>();
        b.sort();
        assert_eq!(a, vec!["d1", "d2"]);
        assert_eq!(a, b);
    }

    #[test]
    fn ft_cascade() {
        let parsers = reference_parsers();
        let th = ValidityThresholds::default();
        let vocab = MetadataVocab::build([&doc("x", "pdflatex").metadata, &doc("y", "legacy-ocr").metadata]);
        let mut cls2 = MetadataClassifier::zeros(vocab);
        cls2.set_weight("authoring_tool", "legacy-ocr", 10.0);

        let empty = Probe::new(doc("a", "pdflatex"), "");
        let r = route_ft(&empty, &th, &cls2, &parsers);
        assert_eq!((r.stage, r.chosen_parser.as_str()), (RouteStage::Cls1Invalid, "vit"));

        let clean = Probe::new(doc("b", "pdflatex"), CLEAN);
        let r = route_ft(&clean, &th, &cls2, &parsers);
        assert_eq!((r.stage, r.chosen_parser.as_str()), (RouteStage::Cls2Accept, "extract"));

        let legacy = Probe::new(doc("c", "legacy-ocr"), CLEAN);
        let r = route_ft(&legacy, &th, &cls2, &parsers);
        assert_eq!((r.stage, r.chosen_parser.as_str()), (RouteStage::Cls2Escalate, "vit"));
    }
}
