//! Budget arithmetic, node partitioning, batch planning and campaign execution.

mod bench;
mod budget;
mod campaign;
mod plan;

pub use bench::{throughput_sweep, BenchRow};
pub use budget::{compute_alpha, partition, Budget, NodePartition};
pub use campaign::{
    quality_summary, read_manifest, run_campaign, Campaign, CampaignOptions, CampaignOutcome, CampaignReport,
    ManifestRecord, ManifestStage, ParserSummary, QualitySummary, Strategy, DEFAULT_BATCH_SIZE,
};
pub use plan::{plan_batch, plan_predictions, BatchPlan};
