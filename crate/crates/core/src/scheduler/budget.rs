use serde::{Deserialize, Serialize};

use crate::parsers::ParserProfile;
use crate::selector::check_alpha;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub total_seconds: f64,
    pub n_docs: usize,
    pub alpha: f64,
}

impl Budget {
    pub fn new(total_seconds: f64, n_docs: usize, alpha: f64) -> Result<Self> {
        let b = Budget { total_seconds, n_docs, alpha };
        b.validate()?;
        Ok(b)
    }

    /// Budget whose heavy fraction follows from the two parsers' average costs.
    pub fn from_costs(total_seconds: f64, n_docs: usize, cheap: &ParserProfile, heavy: &ParserProfile) -> Result<Self> {
        Budget::new(total_seconds, n_docs, compute_alpha(total_seconds, n_docs, cheap, heavy)?)
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if !(self.total_seconds > 0.0) || !self.total_seconds.is_finite() {
            return Err(Error::Config(format!("budget {} s must be positive", self.total_seconds)));
        }
        Ok(())
    }
}

/// Largest heavy fraction whose expected cost fits the budget:
/// `clamp((T - n*c) / (n*(h - c)), 0, 1)` with average costs `c` and `h`.
pub fn compute_alpha(total_seconds: f64, n: usize, cheap: &ParserProfile, heavy: &ParserProfile) -> Result<f64> {
    let (c, h) = (cheap.avg_cost_seconds, heavy.avg_cost_seconds);
    if !(c > 0.0) || !(h > c) {
        return Err(Error::Config(format!(
            "heavy cost {h} s must exceed cheap cost {c} s, and both be positive"
        )));
    }
    if n == 0 {
        return Err(Error::NoDocuments("cannot budget an empty corpus".into()));
    }
    let n = n as f64;
    Ok(((total_seconds - n * c) / (n * (h - c))).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodePartition {
    pub node_id: usize,
    pub doc_ids: Vec<String>,
    pub budget_seconds: f64,
}

/// Splits docs into `nodes` contiguous parts whose sizes differ by at most
/// one; each part gets the budget share of its size.
pub fn partition(doc_ids: &[String], nodes: usize, budget: &Budget) -> Result<Vec<NodePartition>> {
    budget.validate()?;
    let n = doc_ids.len();
    if nodes == 0 {
        return Err(Error::Config("need at least one node".into()));
    }
    if nodes > n {
        return Err(Error::Config(format!("{nodes} nodes for {n} documents")));
    }
    let (base, extra) = (n / nodes, n % nodes);
    let mut out = Vec::with_capacity(nodes);
    let mut start = 0;
    for node_id in 0..nodes {
        let size = base + usize::from(node_id < extra);
        out.push(NodePartition {
            node_id,
            doc_ids: doc_ids[start..start + size].to_vec(),
            budget_seconds: budget.total_seconds * size as f64 / n as f64,
        });
        start += size;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn costs() -> (ParserProfile, ParserProfile) {
        (ParserProfile::builtin("cheap", 0.01), ParserProfile::builtin("heavy", 1.0))
    }

    #[test]
    fn alpha_formula() {
        let (c, h) = costs();
        let a = compute_alpha(60.0, 1000, &c, &h).unwrap();
        assert!((a - 50.0 / 990.0).abs() < 1e-12);
        assert_eq!(compute_alpha(10.0, 1000, &c, &h).unwrap(), 0.0);
        assert_eq!(compute_alpha(1.0, 1000, &c, &h).unwrap(), 0.0);
        assert_eq!(compute_alpha(1000.0, 1000, &c, &h).unwrap(), 1.0);
        assert_eq!(compute_alpha(5000.0, 1000, &c, &h).unwrap(), 1.0);
        assert!(compute_alpha(60.0, 1000, &h, &c).is_err());
        assert!(compute_alpha(60.0, 1000, &c, &c).is_err());
    }

    #[test]
    fn partition_sizes_and_budgets() {
        let ids: Vec<String> = (0..10).map(|i| format!("d{i}")).collect();
        let b = Budget::new(100.0, 10, 0.05).unwrap();
        let parts = partition(&ids, 3, &b).unwrap();
        assert_eq!(parts.iter().map(|p| p.doc_ids.len()).collect::<Vec<_>>(), vec![4, 3, 3]);
        let total: f64 = parts.iter().map(|p| p.budget_seconds).sum();
        assert!((total - 100.0).abs() < 1e-9);
        let joined: Vec<String> = parts.into_iter().flat_map(|p| p.doc_ids).collect();
        assert_eq!(joined, ids);
        assert_eq!(partition(&ids, 1, &b).unwrap()[0].doc_ids, ids);
        assert!(partition(&ids, 11, &b).is_err());
        assert!(partition(&ids, 0, &b).is_err());
    }

    #[test]
    fn budget_validation() {
        assert!(Budget::new(0.0, 1, 0.1).is_err());
        assert!(Budget::new(1.0, 1, 1.5).is_err());
    }
}
