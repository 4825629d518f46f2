use serde::{Deserialize, Serialize};

use super::{Difficulty, ErrorLayer, MockModel, MockSource, ParserKind, ParserProfile};
use crate::corpus::{PerturbationMode, PerturbationSpec, SubstitutionTarget};
use crate::error::{Error, Result};

pub const DEFAULT_PARSER: &str = "extract";
pub const HEAVY_PARSER: &str = "vit";

/// An ordered parser set; predictor outputs are indexed in this order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParserSet {
    parsers: Vec<ParserProfile>,
    default_id: String,
    heavy_id: String,
}

impl ParserSet {
    pub fn new(parsers: Vec<ParserProfile>, default_id: &str, heavy_id: &str) -> Result<Self> {
        let set = ParserSet {
            parsers,
            default_id: default_id.to_owned(),
            heavy_id: heavy_id.to_owned(),
        };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        for p in &self.parsers {
            p.validate()?;
        }
        let mut ids: Vec<&str> = self.ids().collect();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() != self.parsers.len() {
            return Err(Error::Config("parser ids must be unique".into()));
        }
        let d = self.get(&self.default_id)?;
        let h = self.get(&self.heavy_id)?;
        if self.default_id == self.heavy_id {
            return Err(Error::Config("default and heavy parser must differ".into()));
        }
        if h.avg_cost_seconds <= d.avg_cost_seconds {
            return Err(Error::Config(format!(
                "heavy parser `{}` must cost more than default `{}`",
                h.parser_id, d.parser_id
            )));
        }
        Ok(())
    }

    pub fn parsers(&self) -> &[ParserProfile] {
        &self.parsers
    }

    pub fn len(&self) -> usize {
        self.parsers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parsers.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.parsers.iter().map(|p| p.parser_id.as_str())
    }

    pub fn index_of(&self, id: &str) -> Result<usize> {
        self.parsers
            .iter()
            .position(|p| p.parser_id == id)
            .ok_or_else(|| Error::UnknownParser(id.to_owned()))
    }

    pub fn get(&self, id: &str) -> Result<&ParserProfile> {
        self.index_of(id).map(|i| &self.parsers[i])
    }

    pub fn default_parser(&self) -> &ParserProfile {
        &self.parsers[self.default_index()]
    }

    pub fn heavy_parser(&self) -> &ParserProfile {
        &self.parsers[self.heavy_index()]
    }

    pub fn default_index(&self) -> usize {
        self.index_of(&self.default_id).expect("validated")
    }

    pub fn heavy_index(&self) -> usize {
        self.index_of(&self.heavy_id).expect("validated")
    }

    /// Replaces (or appends) a profile with the same id.
    pub fn upsert(&mut self, profile: ParserProfile) -> Result<()> {
        match self.parsers.iter_mut().find(|p| p.parser_id == profile.parser_id) {
            Some(slot) => *slot = profile,
            None => self.parsers.push(profile),
        }
        self.validate()
    }
}

/// Six parsers with crossing quality profiles, mirroring the roles of a
/// text-layer extractor, a ViT page parser, OCR, a layout-model parser, a
/// structure-oriented extractor and a lightweight extractor.
///
/// The cheap extractor is exact on clean born-digital text but loses math
/// markup and has nothing to return for scanned pages; the heavy parser reads
/// the rendered page and keeps math, at the price of word-level noise that
/// grows on dense math, scans and legacy print, and rare dropped pages.
pub fn reference_parsers() -> ParserSet {
    let layer = |mode, rate| ErrorLayer::new(mode, rate);
    let parsers = vec![
        ParserProfile::builtin(DEFAULT_PARSER, 0.01),
        ParserProfile::mock(
            HEAVY_PARSER,
            1.0,
            MockModel::perfect()
                .with_layer(layer(PerturbationMode::WordSubstitution, 0.01).with_difficulty(Difficulty {
                    latex_gain: 15.0,
                    scan_gain: 10.0,
                    legacy_gain: 6.0,
                }))
                .with_layer(layer(PerturbationMode::WhitespaceInjection, 0.002))
                .with_layer(layer(PerturbationMode::PageDrop, 0.005)),
        )
        .with_kind(ParserKind::Vit)
        .with_page_batch(10)
        .with_warm_start(15.0),
        ParserProfile::mock(
            "ocr",
            0.3,
            MockModel::perfect()
                .with_layer(layer(PerturbationMode::LatexFlatten, 1.0))
                .with_layer(ErrorLayer {
                    spec: PerturbationSpec::new(PerturbationMode::CharSubstitution, 0.03, 0),
                    difficulty: Difficulty { scan_gain: 1.0, ..Difficulty::default() },
                    subset: None,
                })
                .with_layer(ErrorLayer {
                    spec: PerturbationSpec::new(PerturbationMode::CharSubstitution, 1.0, 1)
                        .with_target(SubstitutionTarget::Case),
                    difficulty: Difficulty::default(),
                    subset: None,
                }),
        )
        .with_kind(ParserKind::Ocr)
        .with_warm_start(2.0),
        ParserProfile::mock(
            "layout",
            0.6,
            MockModel::perfect()
                .with_layer(layer(PerturbationMode::WordSubstitution, 0.06))
                .with_layer(layer(PerturbationMode::PageDrop, 0.1))
                .with_layer(
                    layer(PerturbationMode::IdentifierCorruption, 0.5)
                        .with_difficulty(Difficulty { latex_gain: 2.0, ..Difficulty::default() }),
                ),
        )
        .with_kind(ParserKind::Vit)
        .with_page_batch(10)
        .with_warm_start(8.0),
        ParserProfile::mock(
            "structured",
            0.05,
            MockModel { source: MockSource::TextLayer, ..MockModel::perfect() }
                .with_layer(layer(PerturbationMode::PageDrop, 0.15))
                .with_layer(layer(PerturbationMode::IdentifierCorruption, 0.3)),
        )
        .with_kind(ParserKind::Extractor),
        ParserProfile::mock(
            "lite",
            0.02,
            MockModel { source: MockSource::TextLayer, ..MockModel::perfect() }.with_layer(
                layer(PerturbationMode::WhitespaceInjection, 0.01)
                    .with_difficulty(Difficulty { legacy_gain: 3.0, ..Difficulty::default() }),
            ),
        )
        .with_kind(ParserKind::Extractor),
    ];
    ParserSet::new(parsers, DEFAULT_PARSER, HEAVY_PARSER).expect("reference parser set is valid")
}
