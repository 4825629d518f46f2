//! Seeded synthetic corpora with controllable length, math density and
//! document-provenance mix.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::perturb::{perturb_pages, PerturbationMode, PerturbationSpec};
use super::record::{join_pages, DocumentMetadata, DocumentRecord};
use crate::error::{Error, Result};
use crate::hash::mix;

/// Authoring tools that mark how a document's text layer was produced.
pub mod tools {
    pub const LATEX: &str = "pdflatex";
    pub const WORD: &str = "Microsoft Word";
    pub const INDESIGN: &str = "Adobe InDesign";
    pub const SCANNER: &str = "scanner";
    pub const LEGACY: &str = "legacy-ocr";
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthProfile {
    pub pages_min: usize,
    pub pages_max: usize,
    pub words_per_page_min: usize,
    pub words_per_page_max: usize,
    /// Share of documents that contain inline math.
    pub latex_doc_fraction: f64,
    /// Share of words that are math tokens inside a math document.
    pub latex_density: f64,
    /// Share of documents carrying chemical identifiers.
    pub chem_doc_fraction: f64,
    /// Share of scanned documents (no usable embedded text layer).
    pub scanned_fraction: f64,
    /// Share of documents from legacy producers (noisy text layer).
    pub legacy_fraction: f64,
}

impl Default for SynthProfile {
    fn default() -> Self {
        SynthProfile {
            pages_min: 1,
            pages_max: 6,
            words_per_page_min: 80,
            words_per_page_max: 160,
            latex_doc_fraction: 0.25,
            latex_density: 0.12,
            chem_doc_fraction: 0.15,
            scanned_fraction: 0.04,
            legacy_fraction: 0.06,
        }
    }
}

impl SynthProfile {
    /// Short documents for large runs where per-document metric cost matters.
    pub fn compact() -> Self {
        SynthProfile {
            pages_min: 1,
            pages_max: 3,
            words_per_page_min: 40,
            words_per_page_max: 70,
            ..SynthProfile::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.pages_min == 0 || self.pages_min > self.pages_max {
            return Err(Error::Config("pages_min must be in 1..=pages_max".into()));
        }
        if self.words_per_page_min == 0 || self.words_per_page_min > self.words_per_page_max {
            return Err(Error::Config("words_per_page_min must be in 1..=words_per_page_max".into()));
        }
        for (name, v) in [
            ("latex_doc_fraction", self.latex_doc_fraction),
            ("latex_density", self.latex_density),
            ("chem_doc_fraction", self.chem_doc_fraction),
            ("scanned_fraction", self.scanned_fraction),
            ("legacy_fraction", self.legacy_fraction),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must be in [0,1], got {v}")));
            }
        }
        if self.scanned_fraction + self.legacy_fraction > 1.0 {
            return Err(Error::Config("scanned_fraction + legacy_fraction exceeds 1".into()));
        }
        Ok(())
    }
}

const VOCAB: &[&str] = &[
    "analysis", "approach", "atom", "boundary", "catalyst", "cell", "charge", "coefficient",
    "compound", "concentration", "condition", "constant", "correlation", "crystal", "current",
    "data", "decay", "density", "derivative", "detector", "diffusion", "dimension", "distribution",
    "domain", "dynamics", "electron", "element", "emission", "energy", "entropy", "enzyme",
    "equation", "equilibrium", "error", "estimate", "experiment", "field", "flow", "flux", "force",
    "fraction", "frequency", "function", "gene", "gradient", "graph", "heat", "hypothesis",
    "interaction", "interval", "ion", "lattice", "layer", "mass", "matrix", "measurement",
    "mechanism", "membrane", "method", "model", "molecule", "momentum", "network", "neuron",
    "noise", "observation", "operator", "orbit", "parameter", "particle", "pathway", "phase",
    "photon", "potential", "pressure", "probability", "process", "protein", "pulse", "quantum",
    "radiation", "reaction", "region", "resonance", "response", "sample", "scale", "sequence",
    "signal", "simulation", "solution", "spectrum", "spin", "stability", "structure", "surface",
    "symmetry", "system", "temperature", "tensor", "theory", "transition", "variance", "velocity",
    "voltage", "wave", "we", "observe", "measure", "derive", "propose", "show", "compute",
    "increase", "reduce", "the", "a", "of", "and", "in", "to", "is", "for", "with", "that",
    "by", "on", "this", "from", "are", "between", "under", "strong", "weak", "linear", "stable",
    "thermal", "optical", "magnetic", "cellular", "significant", "observed", "expected", "large",
    "small", "high", "low", "total", "mean", "relative", "critical", "novel", "robust",
];

const MATH: &[&str] = &[
    "\\alpha", "\\beta", "\\gamma", "\\frac{a}{b}", "x^{2}", "\\sum_{i}", "\\int_{0}^{1}",
    "\\mathbf{v}", "\\partial", "\\sqrt{n}", "\\lambda", "\\nabla", "\\hat{H}", "e^{-t}",
    "\\sigma^{2}", "\\mathcal{L}",
];

const CHEM: &[&str] = &[
    "C6H12O6", "H2O", "CH3COOH", "NaCl", "C1=CC=CC=C1", "CC(=O)O", "pH", "CO2", "NH3", "Fe2O3",
];

const PUBLISHERS: &[&str] = &["acme-press", "elsewhere", "springfield", "openpub", "wileyish", "arxivish"];
const CATEGORIES: &[&str] = &["physics", "chemistry", "biology", "mathematics", "computer-science"];
const FORMATS: &[&str] = &["1.3", "1.4", "1.5", "1.6", "1.7"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Provenance {
    BornDigital,
    Scanned,
    Legacy,
}

fn pick<'a>(rng: &mut ChaCha8Rng, items: &[&'a str]) -> &'a str {
    items[rng.gen_range(0..items.len())]
}

fn page_text(
    rng: &mut ChaCha8Rng,
    words: usize,
    math_rate: f64,
    chem_rate: f64,
) -> String {
    let mut out = String::new();
    let mut sentence_pos = 0usize;
    for w in 0..words {
        let token = if rng.gen_bool(math_rate) {
            pick(rng, MATH).to_owned()
        } else if rng.gen_bool(chem_rate) {
            pick(rng, CHEM).to_owned()
        } else {
            let word = pick(rng, VOCAB);
            if sentence_pos == 0 {
                let mut c = word.chars();
                c.next().map(|f| f.to_uppercase().chain(c).collect()).unwrap_or_default()
            } else {
                word.to_owned()
            }
        };
        if w > 0 {
            out.push(' ');
        }
        out.push_str(&token);
        sentence_pos += 1;
        if sentence_pos >= 8 && rng.gen_bool(0.25) || w + 1 == words {
            out.push('.');
            sentence_pos = 0;
        }
    }
    out
}

/// Generates `n` documents; identical `(n, profile, seed)` give identical corpora.
///
/// Groundtruth is always present. The embedded text layer depends on
/// provenance: born-digital documents carry the groundtruth with math
/// flattened to plain text, scanned documents carry an empty or garbled
/// layer, and legacy documents carry spurious intra-word spaces.
pub fn synth_corpus(n: usize, profile: &SynthProfile, seed: u64) -> Result<Vec<DocumentRecord>> {
    if n == 0 {
        return Err(Error::Config("synth_corpus needs n >= 1".into()));
    }
    profile.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut docs = Vec::with_capacity(n);
    for i in 0..n {
        let doc_id = format!("doc-{seed:x}-{i:06}");
        let roll: f64 = rng.gen();
        let provenance = if roll < profile.scanned_fraction {
            Provenance::Scanned
        } else if roll < profile.scanned_fraction + profile.legacy_fraction {
            Provenance::Legacy
        } else {
            Provenance::BornDigital
        };
        let has_math = profile.latex_density > 0.0 && rng.gen_bool(profile.latex_doc_fraction);
        let has_chem = rng.gen_bool(profile.chem_doc_fraction);
        let math_rate = if has_math { profile.latex_density } else { 0.0 };
        let chem_rate = if has_chem { 0.04 } else { 0.0 };
        let n_pages = rng.gen_range(profile.pages_min..=profile.pages_max);
        let gt_pages: Vec<String> = (0..n_pages)
            .map(|_| {
                let words = rng.gen_range(profile.words_per_page_min..=profile.words_per_page_max);
                page_text(&mut rng, words, math_rate, chem_rate)
            })
            .collect();

        let layer_seed = mix(seed, i as u64);
        let flattened =
            perturb_pages(&gt_pages, &PerturbationSpec::new(PerturbationMode::LatexFlatten, 1.0, layer_seed));
        let (pages, tool, year) = match provenance {
            Provenance::BornDigital => {
                let tool = if has_math {
                    tools::LATEX
                } else {
                    pick(&mut rng, &[tools::LATEX, tools::WORD, tools::INDESIGN])
                };
                (flattened, tool, rng.gen_range(2000..=2024))
            }
            Provenance::Scanned => {
                let pages = if rng.gen_bool(0.5) {
                    vec![String::new(); n_pages]
                } else {
                    perturb_pages(
                        &flattened,
                        &PerturbationSpec::new(PerturbationMode::CharScramble, 0.7, layer_seed),
                    )
                };
                (pages, tools::SCANNER, rng.gen_range(1950..=1999))
            }
            Provenance::Legacy => {
                let pages = perturb_pages(
                    &flattened,
                    &PerturbationSpec::new(PerturbationMode::WhitespaceInjection, 0.08, layer_seed),
                );
                (pages, tools::LEGACY, rng.gen_range(1985..=2005))
            }
        };
        let category = if has_chem {
            "chemistry"
        } else if has_math {
            pick(&mut rng, &["physics", "mathematics"])
        } else {
            pick(&mut rng, CATEGORIES)
        };
        let metadata = DocumentMetadata {
            authoring_tool: tool.to_owned(),
            year,
            page_count: n_pages,
            publisher: pick(&mut rng, PUBLISHERS).to_owned(),
            category: category.to_owned(),
            format_version: pick(&mut rng, FORMATS).to_owned(),
        };
        docs.push(DocumentRecord::new(doc_id, pages, metadata, Some(join_pages(&gt_pages)))?);
    }
    Ok(docs)
}

/// Share of groundtruth words that are math commands, in `[0, 1]`.
pub fn latex_density(doc: &DocumentRecord) -> f64 {
    let Some(gt) = doc.groundtruth.as_deref() else { return 0.0 };
    let mut total = 0usize;
    let mut math = 0usize;
    for w in gt.split_whitespace() {
        total += 1;
        if w.contains('\\') || w.contains('^') || w.contains('{') {
            math += 1;
        }
    }
    if total == 0 { 0.0 } else { math as f64 / total as f64 }
}
