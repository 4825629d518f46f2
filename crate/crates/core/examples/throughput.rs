//! Measures parsing throughput of a CPU-bound mock across worker counts.
//!
//! `cargo run --release --example throughput`
use std::sync::Arc;

use adaparse::corpus::{synth_corpus, SynthProfile};
use adaparse::parsers::{MockModel, ParserProfile};
use adaparse::scheduler::throughput_sweep;

fn main() -> adaparse::Result<()> {
    let docs: Vec<_> = synth_corpus(200, &SynthProfile::compact(), 9)?.into_iter().map(Arc::new).collect();
    let profile = ParserProfile::mock("cpu-mock", 1.0, MockModel::perfect());
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    println!("{cores} core(s) available");
    for r in throughput_sweep(&docs, &profile, &[1, 2, 4, 8], 0.005)? {
        println!("{} workers: {:.1} docs/s, efficiency {:.2}", r.workers, r.throughput, r.efficiency);
    }
    Ok(())
}
