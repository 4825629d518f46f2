//! Parses a corpus with a pool of warm workers for one mock parser.
//!
//! `cargo run --release --example parser_pool`
use std::sync::Arc;

use adaparse::corpus::{synth_corpus, SynthProfile};
use adaparse::metrics::{bleu, MetricConfig};
use adaparse::parsers::{parse_all, reference_parsers, PoolConfig, ProfileWorkerFactory};

fn main() -> adaparse::Result<()> {
    let docs: Vec<_> = synth_corpus(200, &SynthProfile::compact(), 2)?.into_iter().map(Arc::new).collect();
    let parsers = reference_parsers();
    let cfg = MetricConfig::default();
    for profile in parsers.parsers() {
        let mut total = 0.0;
        let factory = Arc::new(ProfileWorkerFactory::new(profile.clone()));
        let stats = parse_all(factory, PoolConfig::new(2), &docs, |done| {
            let doc = &docs[done.tag as usize];
            total += bleu(&done.result.text, doc.groundtruth.as_deref().unwrap_or_default(), &cfg);
        })?;
        println!(
            "{:<10} mean bleu {:.3}  processed {}  crashes {}",
            profile.parser_id,
            total / docs.len() as f64,
            stats.processed,
            stats.crashes
        );
    }
    Ok(())
}
