use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::campaign::{Campaign, CampaignOptions, Strategy};
use crate::corpus::DocumentRecord;
use crate::parsers::{ParserProfile, ParserSet};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub workers: usize,
    pub docs: usize,
    pub wall_seconds: f64,
    pub throughput: f64,
    /// `throughput / (workers * throughput at the first row's worker count)`,
    /// scaled by that first count.
    pub efficiency: f64,
}

/// Runs a single-parser campaign over `docs` once per worker count, with
/// each parse burning `spin_scale * modeled cost` of CPU.
pub fn throughput_sweep(
    docs: &[Arc<DocumentRecord>],
    profile: &ParserProfile,
    worker_counts: &[usize],
    spin_scale: f64,
) -> Result<Vec<BenchRow>> {
    if worker_counts.is_empty() || worker_counts.contains(&0) {
        return Err(Error::Config("worker counts must be non-empty and positive".into()));
    }
    profile.validate()?;
    // A single-parser campaign still needs a cheaper default in its set.
    let cheap = ParserProfile::builtin(format!("{}-cheap", profile.parser_id), profile.avg_cost_seconds / 2.0);
    let set = ParserSet::new(vec![cheap.clone(), profile.clone()], &cheap.parser_id, &profile.parser_id)?;
    let mut rows: Vec<BenchRow> = Vec::with_capacity(worker_counts.len());
    for &w in worker_counts {
        let opts = CampaignOptions {
            strategy: Strategy::Single(profile.parser_id.clone()),
            workers: w,
            spin_scale,
            ..Default::default()
        };
        let out = Campaign::new(&set, opts).run(docs)?;
        let wall = out.report.wall_seconds;
        let throughput = docs.len() as f64 / wall.max(1e-9);
        let efficiency = match rows.first() {
            Some(base) => throughput * base.workers as f64 / (w as f64 * base.throughput),
            None => 1.0,
        };
        log::info!("bench: {w} workers, {:.1} docs/s, efficiency {efficiency:.3}", throughput);
        rows.push(BenchRow { workers: w, docs: docs.len(), wall_seconds: wall, throughput, efficiency });
    }
    Ok(rows)
}
