//! Builders for training sets from a corpus with groundtruth.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{PreferencePair, RegressionExample};
use crate::corpus::{DocumentMetadata, DocumentRecord};
use crate::metrics::{bleu, MetricConfig, PreferenceRecord};
use crate::parsers::{parse, parse_first_page, ParserSet};
use crate::selector::accuracy_matrix;
use crate::{Error, Result};

fn page_outputs(docs: &[Arc<DocumentRecord>], parsers: &ParserSet) -> Vec<String> {
    docs.iter()
        .flat_map(|doc| parsers.parsers().iter().map(move |p| parse(p, doc).text))
        .collect()
}

/// One example per page: the default parser's page text against each
/// parser's BLEU on that page. Pages a parser did not emit score 0.
pub fn page_examples(docs: &[Arc<DocumentRecord>], parsers: &ParserSet, metric: &MetricConfig) -> Result<Vec<RegressionExample>> {
    let m = parsers.len();
    let outputs = page_outputs(docs, parsers);
    let mut out = Vec::new();
    for (di, doc) in docs.iter().enumerate() {
        let gt = doc
            .groundtruth_pages()
            .ok_or_else(|| Error::Precondition(format!("{} has no groundtruth", doc.doc_id)))?;
        let split: Vec<Vec<&str>> = (0..m).map(|j| outputs[di * m + j].split(crate::metrics::PAGE_BREAK).collect()).collect();
        for (pi, gt_page) in gt.iter().enumerate() {
            let page = |j: usize| split[j].get(pi).copied().unwrap_or("");
            let targets = (0..m).map(|j| bleu(page(j), gt_page, metric)).collect();
            out.push(RegressionExample::new(page(parsers.default_index()), targets));
        }
    }
    Ok(out)
}

/// One example per document: first-page default text against document BLEU.
pub fn document_examples(docs: &[Arc<DocumentRecord>], parsers: &ParserSet, metric: &MetricConfig) -> Result<Vec<RegressionExample>> {
    let matrix = accuracy_matrix(docs, parsers, metric)?;
    let default = parsers.default_parser();
    Ok(docs
        .iter()
        .zip(matrix)
        .map(|(doc, row)| RegressionExample::new(parse_first_page(default, doc).text, row))
        .collect())
}

/// Escalation labels: the heavy parser beats the default by more than `margin`.
pub fn escalation_labels(docs: &[Arc<DocumentRecord>], matrix: &[Vec<f64>], parsers: &ParserSet, margin: f64) -> Vec<(DocumentMetadata, bool)> {
    let (d, h) = (parsers.default_index(), parsers.heavy_index());
    docs.iter().zip(matrix).map(|(doc, row)| (doc.metadata.clone(), row[h] - row[d] > margin)).collect()
}

/// Simulated annotation: for random pages and random parser pairs, the
/// output with the higher page BLEU is preferred. Ties and identical
/// outputs are skipped.
pub fn simulated_preferences(
    docs: &[Arc<DocumentRecord>],
    parsers: &ParserSet,
    metric: &MetricConfig,
    count: usize,
    seed: u64,
) -> Result<Vec<PreferencePair>> {
    if parsers.len() < 2 || docs.is_empty() {
        return Err(Error::InsufficientData("need two parsers and at least one document".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count && attempts < count * 20 {
        attempts += 1;
        let doc = &docs[rng.gen_range(0..docs.len())];
        let Some(gt) = doc.groundtruth_pages() else { continue };
        let page = rng.gen_range(0..gt.len());
        let a = rng.gen_range(0..parsers.len());
        let b = (a + rng.gen_range(1..parsers.len())) % parsers.len();
        let text = |j: usize| {
            let r = parse(&parsers.parsers()[j], doc);
            r.pages().get(page).map(|s| s.to_string()).unwrap_or_default()
        };
        let (ta, tb) = (text(a), text(b));
        if ta == tb {
            continue;
        }
        let (sa, sb) = (bleu(&ta, gt[page], metric), bleu(&tb, gt[page], metric));
        let page_id = format!("{}#{}", doc.doc_id, page + 1);
        if sa > sb {
            out.push(PreferencePair::new(page_id, ta, tb));
        } else if sb > sa {
            out.push(PreferencePair::new(page_id, tb, ta));
        }
    }
    Ok(out)
}

/// Turns annotation records into pairs, looking texts up by
/// `(page_id, parser_id)`. Indifference records are dropped.
pub fn pairs_from_records<F>(records: &[PreferenceRecord], mut text_of: F) -> Result<Vec<PreferencePair>>
where
    F: FnMut(&str, &str) -> Option<String>,
{
    let mut out = Vec::new();
    for r in records {
        r.validate()?;
        if r.is_indifferent() {
            continue;
        }
        let (Some(winner), Some(loser)) = (r.winner_parser.as_parser(), r.loser_parser.as_parser()) else {
            continue;
        };
        let lookup = |t: Option<String>, parser: &str| {
            t.ok_or_else(|| Error::Precondition(format!("no text for page {} parser {parser}", r.page_id)))
        };
        let preferred = lookup(text_of(&r.page_id, winner), winner)?;
        let rejected = lookup(text_of(&r.page_id, loser), loser)?;
        if preferred != rejected {
            out.push(PreferencePair::new(r.page_id.clone(), preferred, rejected));
        }
    }
    Ok(out)
}
