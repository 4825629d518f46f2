//! Routes one batch with an oracle predictor and caps the heavy parser.
//!
//! `cargo run --release --example routing`
use std::sync::Arc;

use adaparse::corpus::{synth_corpus, SynthProfile};
use adaparse::metrics::MetricConfig;
use adaparse::parsers::reference_parsers;
use adaparse::scheduler::plan_batch;
use adaparse::selector::{accuracy_matrix, route_llm, OraclePredictor, Probe, ValidityThresholds};

fn main() -> adaparse::Result<()> {
    let docs: Vec<_> = synth_corpus(64, &SynthProfile::compact(), 3)?.into_iter().map(Arc::new).collect();
    let parsers = reference_parsers();
    let matrix = accuracy_matrix(&docs, &parsers, &MetricConfig::default())?;
    let mut oracle = OraclePredictor::new(parsers.len());
    for (d, row) in docs.iter().zip(matrix) {
        oracle.insert(d.doc_id.clone(), row)?;
    }

    let probes: Vec<Probe> = docs.iter().map(|d| Probe::new(Arc::clone(d), d.pages[0].clone())).collect();
    let alpha = 0.1;
    let mut decisions = route_llm(&probes, &oracle, alpha, &ValidityThresholds::default(), &parsers)?;
    let plan = plan_batch(0, &mut decisions, alpha, &parsers)?;
    println!("{} of {} documents go to the heavy parser (cap {})", plan.heavy_count, plan.k(), plan.cap);
    if let Some(e) = plan.expected_accuracy {
        println!("expected mean accuracy {:.4}", e / plan.k() as f64);
    }
    for d in decisions.iter().filter(|d| d.chosen_parser == parsers.heavy_parser().parser_id) {
        println!("  {} {:?} gain {:.3}", d.doc_id, d.stage, d.priority);
    }
    Ok(())
}
