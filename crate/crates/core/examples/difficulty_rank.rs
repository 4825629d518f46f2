//! Ranks documents by mean BLEU across parsers and writes the ranking as CSV.
//!
//! `cargo run --release --example difficulty_rank`
use std::sync::Arc;

use adaparse::corpus::{synth_corpus, SynthProfile};
use adaparse::harness::{difficulty_rank, write_rank_csv};
use adaparse::metrics::MetricConfig;
use adaparse::parsers::reference_parsers;

fn main() -> adaparse::Result<()> {
    let docs: Vec<_> = synth_corpus(200, &SynthProfile::compact(), 8)?.into_iter().map(Arc::new).collect();
    let parsers = reference_parsers();
    let ranked = difficulty_rank(&docs, &parsers, &MetricConfig::default())?;
    for r in ranked.iter().take(5) {
        let doc = docs.iter().find(|d| d.doc_id == r.doc_id).expect("ranked doc exists");
        println!("{:>3} {} {:.3} ({}, {})", r.rank, r.doc_id, r.mean_bleu, doc.metadata.authoring_tool, doc.metadata.year);
    }
    let ids: Vec<String> = parsers.ids().map(str::to_owned).collect();
    let path = std::env::temp_dir().join("adaparse-example-rank.csv");
    write_rank_csv(&path, &ranked, &ids)?;
    println!("full ranking: {}", path.display());
    Ok(())
}
