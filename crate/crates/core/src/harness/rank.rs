use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::corpus::DocumentRecord;
use crate::metrics::MetricConfig;
use crate::parsers::ParserSet;
use crate::selector::accuracy_matrix;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedDoc {
    /// 1 is the hardest document.
    pub rank: usize,
    pub doc_id: String,
    pub mean_bleu: f64,
    pub per_parser: Vec<f64>,
}

/// Orders documents by mean BLEU across parsers, hardest first. Ties go to
/// the smaller doc id.
pub fn rank_from_matrix(doc_ids: &[String], parser_count: usize, matrix: &[Vec<f64>]) -> Result<Vec<RankedDoc>> {
    if doc_ids.len() != matrix.len() {
        return Err(Error::DimensionMismatch { expected: doc_ids.len(), got: matrix.len() });
    }
    if parser_count == 0 {
        return Err(Error::InsufficientData("no parsers to average".into()));
    }
    let mut rows = Vec::with_capacity(doc_ids.len());
    for (id, row) in doc_ids.iter().zip(matrix) {
        if row.len() != parser_count {
            return Err(Error::Precondition(format!(
                "{id}: {} of {parser_count} parser scores present",
                row.len()
            )));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::Precondition(format!("{id}: missing parse score")));
        }
        let mean = row.iter().sum::<f64>() / parser_count as f64;
        rows.push(RankedDoc { rank: 0, doc_id: id.clone(), mean_bleu: mean, per_parser: row.clone() });
    }
    rows.sort_by(|a, b| a.mean_bleu.total_cmp(&b.mean_bleu).then_with(|| a.doc_id.cmp(&b.doc_id)));
    for (i, r) in rows.iter_mut().enumerate() {
        r.rank = i + 1;
    }
    Ok(rows)
}

/// Runs every parser on every document and ranks by difficulty.
pub fn difficulty_rank(docs: &[Arc<DocumentRecord>], parsers: &ParserSet, metric: &MetricConfig) -> Result<Vec<RankedDoc>> {
    let matrix = accuracy_matrix(docs, parsers, metric)?;
    let ids: Vec<String> = docs.iter().map(|d| d.doc_id.clone()).collect();
    rank_from_matrix(&ids, parsers.len(), &matrix)
}

/// CSV with columns `rank, doc_id, mean_bleu, <parser ids...>`.
pub fn write_rank_csv(path: &Path, ranked: &[RankedDoc], parser_ids: &[String]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["rank".to_owned(), "doc_id".to_owned(), "mean_bleu".to_owned()];
    header.extend(parser_ids.iter().cloned());
    w.write_record(&header)?;
    for r in ranked {
        let mut rec = vec![r.rank.to_string(), r.doc_id.clone(), format!("{:.6}", r.mean_bleu)];
        rec.extend(r.per_parser.iter().map(|v| format!("{v:.6}")));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("d{i}")).collect()
    }

    #[test]
    fn perfect_doc_ranks_last() {
        let m = vec![vec![0.5, 0.4], vec![1.0, 1.0], vec![0.1, 0.9]];
        let r = rank_from_matrix(&ids(3), 2, &m).unwrap();
        assert_eq!(r.last().unwrap().doc_id, "d1");
        assert_eq!(r[0].rank, 1);
    }

    #[test]
    fn single_doc_is_rank_one() {
        let r = rank_from_matrix(&ids(1), 1, &[vec![0.3]]).unwrap();
        assert_eq!(r[0].rank, 1);
    }

    #[test]
    fn missing_scores_are_errors() {
        assert!(rank_from_matrix(&ids(2), 2, &[vec![0.1, 0.2], vec![0.3]]).is_err());
        assert!(rank_from_matrix(&ids(1), 2, &[vec![0.1, f64::NAN]]).is_err());
        assert!(rank_from_matrix(&ids(2), 2, &[vec![0.1, 0.2]]).is_err());
    }
}
