//! Deterministic mock parsers built from perturbation layers.

use serde::{Deserialize, Serialize};

use crate::corpus::{
    latex_density, perturb_pages, tools, DocumentRecord, PerturbationMode,
    PerturbationSpec,
};
use crate::hash::{fnv1a64, mix, unit_interval};

/// What the mock "sees": the rendered page (groundtruth) or the embedded text layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MockSource {
    Groundtruth,
    TextLayer,
}

/// Scales a layer's error rate with per-document properties, so that which
/// parser does best varies across documents.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Difficulty {
    /// Multiplies in `1 + latex_gain * latex_density(doc)`.
    pub latex_gain: f64,
    /// Multiplies in `1 + scan_gain` on scanned documents.
    pub scan_gain: f64,
    /// Multiplies in `1 + legacy_gain` on legacy-producer documents.
    pub legacy_gain: f64,
}

impl Difficulty {
    pub fn factor(&self, doc: &DocumentRecord) -> f64 {
        let tool = doc.metadata.authoring_tool.as_str();
        let mut f = 1.0 + self.latex_gain * latex_density(doc);
        if tool == tools::SCANNER {
            f *= 1.0 + self.scan_gain;
        }
        if tool == tools::LEGACY {
            f *= 1.0 + self.legacy_gain;
        }
        f.max(0.0)
    }
}

/// Restricts a layer to a hashed share of documents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DocSubset {
    pub fraction: f64,
    pub seed: u64,
}

impl DocSubset {
    pub fn contains(&self, doc_id: &str) -> bool {
        unit_interval(mix(fnv1a64(doc_id.as_bytes()), self.seed ^ 0x5b5e7)) < self.fraction
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorLayer {
    pub spec: PerturbationSpec,
    #[serde(default)]
    pub difficulty: Difficulty,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subset: Option<DocSubset>,
}

impl ErrorLayer {
    pub fn new(mode: PerturbationMode, rate: f64) -> Self {
        ErrorLayer { spec: PerturbationSpec::new(mode, rate, 0), difficulty: Difficulty::default(), subset: None }
    }

    pub fn with_difficulty(mut self, difficulty: Difficulty) -> Self {
        self.difficulty = difficulty;
        self
    }

    pub fn with_subset(mut self, subset: DocSubset) -> Self {
        self.subset = Some(subset);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockModel {
    pub source: MockSource,
    #[serde(default)]
    pub errors: Vec<ErrorLayer>,
    /// Share of documents on which the parser crashes outright.
    #[serde(default)]
    pub crash_rate: f64,
}

impl MockModel {
    pub fn perfect() -> Self {
        MockModel { source: MockSource::Groundtruth, errors: Vec::new(), crash_rate: 0.0 }
    }

    pub fn with_layer(mut self, layer: ErrorLayer) -> Self {
        self.errors.push(layer);
        self
    }

    pub fn crashes_on(&self, parser_id: &str, doc: &DocumentRecord) -> bool {
        self.crash_rate > 0.0
            && unit_interval(mix(fnv1a64(doc.doc_id.as_bytes()), fnv1a64(parser_id.as_bytes()) ^ 0xc4a5))
                < self.crash_rate
    }

    /// Page texts this mock emits for `doc`; dropped pages come back empty so
    /// page positions stay aligned with the document.
    ///
    /// A `page_drop` layer drops each page independently with probability
    /// `rate` (all other layers corrupt `ceil(rate * units)` units).
    pub fn render(&self, parser_id: &str, doc: &DocumentRecord) -> Vec<String> {
        let mut pages: Vec<String> = match (self.source, doc.groundtruth_pages()) {
            (MockSource::Groundtruth, Some(gt)) => gt.into_iter().map(str::to_owned).collect(),
            _ => doc.pages.clone(),
        };
        let doc_salt = mix(fnv1a64(parser_id.as_bytes()), fnv1a64(doc.doc_id.as_bytes()));
        for (i, layer) in self.errors.iter().enumerate() {
            if layer.subset.is_some_and(|s| !s.contains(&doc.doc_id)) {
                continue;
            }
            let rate = (layer.spec.rate * layer.difficulty.factor(doc)).clamp(0.0, 1.0);
            let spec = PerturbationSpec {
                rate,
                seed: mix(doc_salt ^ layer.spec.seed, i as u64),
                ..layer.spec
            };
            if spec.mode == PerturbationMode::PageDrop {
                for (p, page) in pages.iter_mut().enumerate() {
                    if unit_interval(mix(spec.seed, p as u64)) < rate {
                        page.clear();
                    }
                }
            } else {
                pages = perturb_pages(&pages, &spec);
            }
        }
        pages
    }
}
