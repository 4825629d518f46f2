//! Runs a budgeted adaptive campaign and prints its report.
//!
//! `cargo run --release --example campaign`
use std::sync::Arc;

use adaparse::corpus::{synth_corpus, SynthProfile};
use adaparse::metrics::MetricConfig;
use adaparse::parsers::reference_parsers;
use adaparse::scheduler::{compute_alpha, Campaign, CampaignOptions, Strategy};
use adaparse::training::{train_from_corpus, CorpusTrainConfig};

fn main() -> adaparse::Result<()> {
    let parsers = reference_parsers();
    let train: Vec<_> = synth_corpus(300, &SynthProfile::compact(), 6)?.into_iter().map(Arc::new).collect();
    let docs: Vec<_> = synth_corpus(2000, &SynthProfile::compact(), 7)?.into_iter().map(Arc::new).collect();
    let models = train_from_corpus(&train, &parsers, &MetricConfig::default(), &CorpusTrainConfig::default())?;

    let cheap = parsers.default_parser();
    let n = docs.len() as f64;
    let budget = 0.07 * n;
    // First-page probes cost at most one cheap parse per document.
    let alpha = compute_alpha(budget - n * cheap.avg_cost_seconds, docs.len(), cheap, parsers.heavy_parser())?;
    println!("budget {budget:.0} s allows alpha {alpha:.4}\n");

    let opts = CampaignOptions {
        strategy: Strategy::AdaparseLlm,
        alpha,
        workers: 2,
        budget_seconds: Some(budget),
        ..Default::default()
    };
    let manifest = std::env::temp_dir().join("adaparse-example-manifest.jsonl");
    let out = Campaign::new(&parsers, opts).with_predictor(Arc::new(models.predictor().clone())).with_manifest(&manifest).run(&docs)?;
    print!("{}", out.report.to_table());
    println!("\nmanifest: {}", manifest.display());
    Ok(())
}
