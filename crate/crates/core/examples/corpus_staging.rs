//! Synthesizes a corpus, writes it as zip archives, stages it back and
//! applies a perturbation to one document.
//!
//! `cargo run --release --example corpus_staging`
use adaparse::corpus::{perturb, stage_archives, synth_corpus, write_archives, PerturbationMode, PerturbationSpec, SynthProfile};

fn main() -> adaparse::Result<()> {
    let dir = std::env::temp_dir().join("adaparse-example-staging");
    let docs = synth_corpus(250, &SynthProfile::compact(), 1)?;
    let archives = write_archives(&dir.join("archives"), &docs, 100)?;
    println!("wrote {} archives", archives.len());

    let staged = stage_archives(&archives, &dir.join("staged"))?;
    println!("staged {} documents, skipped {}", staged.len(), staged.skipped());

    let doc = &staged.docs()[0];
    let page = &doc.pages[0];
    println!("\n{} ({}), first page:\n{}", doc.doc_id, doc.metadata.authoring_tool, &page[..page.len().min(240)]);
    for mode in [PerturbationMode::CharScramble, PerturbationMode::WhitespaceInjection, PerturbationMode::LatexFlatten] {
        let noisy = perturb(page, &PerturbationSpec::new(mode, 0.2, 7));
        println!("\n{mode:?} at 0.2:\n{}", &noisy[..noisy.len().min(240)]);
    }
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
