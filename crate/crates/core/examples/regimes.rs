//! Compares strategies on a clean corpus and under text-layer and image
//! degradation.
//!
//! `cargo run --release --example regimes`
use adaparse::harness::{run_regime, ExperimentSpec};
use adaparse::parsers::reference_parsers;

fn main() -> adaparse::Result<()> {
    let parsers = reference_parsers();
    let n = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(300);
    for (name, mut spec) in [
        ("clean", ExperimentSpec::unperturbed(11)),
        ("15% scrambled text layers", ExperimentSpec::text_layer(11, 0.15)),
        ("15% degraded images", ExperimentSpec::image(11, 0.15)),
    ] {
        spec.n_docs = n;
        spec.train_docs = n;
        spec.strategies = ExperimentSpec::all_strategies(&parsers);
        println!("== {name}\n{}", run_regime(&spec, &parsers)?.to_table());
    }
    Ok(())
}
