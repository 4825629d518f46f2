//! Trains the accuracy predictor and metadata classifier on a synthetic
//! corpus and reports held-out fit after each step.
//!
//! `cargo run --release --example training`
use std::sync::Arc;

use adaparse::corpus::{synth_corpus, SynthProfile};
use adaparse::metrics::MetricConfig;
use adaparse::parsers::reference_parsers;
use adaparse::selector::accuracy_matrix;
use adaparse::training::{document_examples_from, mean_r_squared, train_from_corpus, CorpusTrainConfig};

fn main() -> adaparse::Result<()> {
    let parsers = reference_parsers();
    let metric = MetricConfig::default();
    let train: Vec<_> = synth_corpus(400, &SynthProfile::compact(), 4)?.into_iter().map(Arc::new).collect();
    let held: Vec<_> = synth_corpus(150, &SynthProfile::compact(), 5)?.into_iter().map(Arc::new).collect();

    let models = train_from_corpus(&train, &parsers, &metric, &CorpusTrainConfig::default())?;
    let held_data = document_examples_from(&held, &accuracy_matrix(&held, &parsers, &metric)?, &parsers);
    let p = &models.pipeline;
    for (name, m) in [("regression", &p.stage1), ("preference", &p.stage2), ("final", &p.stage3)] {
        println!("{name:<11} held-out R² {:.3}", mean_r_squared(m, &held_data)?);
    }
    let path = std::env::temp_dir().join("adaparse-example-predictor.json");
    p.stage3.save(&path)?;
    println!("weights saved to {}", path.display());
    Ok(())
}
