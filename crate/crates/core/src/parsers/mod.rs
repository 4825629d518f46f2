//! Uniform parser interface over the built-in text-layer extractor, mock
//! parsers with known error models, and external command-line tools.

mod external;
mod mock;
mod pool;
mod registry;

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::corpus::{join_pages, DocumentRecord};
use crate::error::{Error, Result};
use crate::metrics::PAGE_BREAK;

pub use external::render_command;
pub use mock::{Difficulty, DocSubset, ErrorLayer, MockModel, MockSource};
pub use pool::{
    parse_all, warm_pool, Completed, Job, PoolConfig, PoolStats, ProfileWorkerFactory, Scorer, Worker,
    WorkerFactory, WorkerFault, WorkerPool,
};
pub use registry::{reference_parsers, ParserSet, DEFAULT_PARSER, HEAVY_PARSER};

pub const DEFAULT_TIMEOUT_SECONDS: f64 = 120.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParserKind {
    Extractor,
    Ocr,
    Vit,
    Mock,
    External,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Engine {
    /// Returns the document's embedded text layer.
    Builtin,
    Mock(MockModel),
    External { command: String },
}

fn default_batch() -> usize {
    1
}

fn default_timeout() -> f64 {
    DEFAULT_TIMEOUT_SECONDS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParserProfile {
    pub parser_id: String,
    pub kind: ParserKind,
    /// Average modeled cost of one document, in seconds.
    pub avg_cost_seconds: f64,
    /// Pages per inference batch (heavy parsers).
    #[serde(default = "default_batch")]
    pub page_batch_size: usize,
    #[serde(default)]
    pub warm_start: bool,
    /// Modeled one-time initialization cost of a worker (model load, process spawn).
    #[serde(default)]
    pub init_seconds: f64,
    #[serde(default = "default_timeout")]
    pub timeout_seconds: f64,
    pub engine: Engine,
}

impl ParserProfile {
    pub fn builtin(id: impl Into<String>, avg_cost_seconds: f64) -> Self {
        ParserProfile {
            parser_id: id.into(),
            kind: ParserKind::Extractor,
            avg_cost_seconds,
            page_batch_size: 1,
            warm_start: false,
            init_seconds: 0.0,
            timeout_seconds: DEFAULT_TIMEOUT_SECONDS,
            engine: Engine::Builtin,
        }
    }

    pub fn mock(id: impl Into<String>, avg_cost_seconds: f64, model: MockModel) -> Self {
        ParserProfile {
            kind: ParserKind::Mock,
            engine: Engine::Mock(model),
            ..ParserProfile::builtin(id, avg_cost_seconds)
        }
    }

    pub fn external(id: impl Into<String>, avg_cost_seconds: f64, command: impl Into<String>) -> Self {
        ParserProfile {
            kind: ParserKind::External,
            engine: Engine::External { command: command.into() },
            ..ParserProfile::builtin(id, avg_cost_seconds)
        }
    }

    pub fn with_warm_start(mut self, init_seconds: f64) -> Self {
        self.warm_start = true;
        self.init_seconds = init_seconds;
        self
    }

    pub fn with_page_batch(mut self, pages: usize) -> Self {
        self.page_batch_size = pages;
        self
    }

    pub fn with_kind(mut self, kind: ParserKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn with_timeout(mut self, seconds: f64) -> Self {
        self.timeout_seconds = seconds;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.avg_cost_seconds > 0.0) {
            return Err(Error::Config(format!(
                "{}: avg_cost_seconds must be positive",
                self.parser_id
            )));
        }
        if self.page_batch_size == 0 {
            return Err(Error::Config(format!("{}: page_batch_size must be >= 1", self.parser_id)));
        }
        if !(self.timeout_seconds > 0.0) {
            return Err(Error::Config(format!("{}: timeout must be positive", self.parser_id)));
        }
        Ok(())
    }

    pub fn is_deterministic(&self) -> bool {
        !matches!(self.engine, Engine::External { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseStatus {
    Ok,
    Partial,
    Failed,
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParseResult {
    pub doc_id: String,
    pub parser_id: String,
    /// Output pages joined by form feeds.
    pub text: String,
    pub pages_emitted: usize,
    pub wall_seconds: f64,
    pub status: ParseStatus,
}

impl ParseResult {
    fn from_pages<S: AsRef<str>>(
        profile: &ParserProfile,
        doc: &DocumentRecord,
        pages: &[S],
        wall_seconds: f64,
    ) -> Self {
        let emitted = pages.iter().filter(|p| p.as_ref().chars().any(|c| !c.is_whitespace())).count();
        let status = match emitted {
            0 => ParseStatus::Failed,
            n if n < doc.page_count() => ParseStatus::Partial,
            _ => ParseStatus::Ok,
        };
        ParseResult {
            doc_id: doc.doc_id.clone(),
            parser_id: profile.parser_id.clone(),
            text: join_pages(pages),
            pages_emitted: emitted,
            wall_seconds,
            status,
        }
    }

    pub fn failed(parser_id: &str, doc_id: &str, wall_seconds: f64) -> Self {
        ParseResult {
            doc_id: doc_id.to_owned(),
            parser_id: parser_id.to_owned(),
            text: String::new(),
            pages_emitted: 0,
            wall_seconds,
            status: ParseStatus::Failed,
        }
    }

    pub fn pages(&self) -> Vec<&str> {
        self.text.split(PAGE_BREAK).collect()
    }
}

/// Runs `parser` on `doc`.
///
/// Never fails on bad content: problems surface as `failed`, `partial` or
/// `timeout` status. Built-in and mock parsers report their modeled cost as
/// `wall_seconds` and are byte-for-byte deterministic.
pub fn parse(parser: &ParserProfile, doc: &DocumentRecord) -> ParseResult {
    match &parser.engine {
        Engine::Builtin => ParseResult::from_pages(parser, doc, &doc.pages, parser.avg_cost_seconds),
        Engine::Mock(model) => {
            if model.crashes_on(&parser.parser_id, doc) {
                return ParseResult::failed(&parser.parser_id, &doc.doc_id, parser.avg_cost_seconds);
            }
            let pages = model.render(&parser.parser_id, doc);
            ParseResult::from_pages(parser, doc, &pages, parser.avg_cost_seconds)
        }
        Engine::External { command } => {
            let out = external::run_external(
                command,
                doc,
                Duration::from_secs_f64(parser.timeout_seconds),
            );
            if let Some(detail) = &out.detail {
                log::warn!("{} on {}: {detail}", parser.parser_id, doc.doc_id);
            }
            match out.status {
                ParseStatus::Ok => {
                    let pages: Vec<&str> = out.text.split(PAGE_BREAK).collect();
                    ParseResult::from_pages(parser, doc, &pages, out.wall_seconds)
                }
                status => ParseResult {
                    status,
                    ..ParseResult::failed(&parser.parser_id, &doc.doc_id, out.wall_seconds)
                },
            }
        }
    }
}

/// Page-one text from a probe parse, with its own cost so probe work shows
/// up separately in campaign accounting.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstPage {
    pub text: String,
    pub wall_seconds: f64,
}

pub fn parse_first_page(parser: &ParserProfile, doc: &DocumentRecord) -> FirstPage {
    match &parser.engine {
        Engine::Builtin => FirstPage {
            text: doc.pages[0].clone(),
            wall_seconds: parser.avg_cost_seconds / doc.page_count() as f64,
        },
        _ => {
            let full = parse(parser, doc);
            let text = full.text.split(PAGE_BREAK).next().unwrap_or("").to_owned();
            let wall_seconds = match parser.engine {
                Engine::External { .. } => full.wall_seconds,
                _ => parser.avg_cost_seconds / doc.page_count() as f64,
            };
            FirstPage { text, wall_seconds }
        }
    }
}

/// One inference batch of at most `page_batch_size` pages: `(doc index, page index)`.
pub type PageBatch = Vec<(usize, usize)>;

/// Packs pages of consecutive documents greedily into fixed-size batches;
/// the final partial batch is flushed as is.
pub fn page_batches(page_counts: &[usize], batch_size: usize) -> Vec<PageBatch> {
    let batch_size = batch_size.max(1);
    let mut batches = Vec::new();
    let mut current = Vec::with_capacity(batch_size);
    for (doc, &pages) in page_counts.iter().enumerate() {
        for page in 0..pages {
            current.push((doc, page));
            if current.len() == batch_size {
                batches.push(std::mem::replace(&mut current, Vec::with_capacity(batch_size)));
            }
        }
    }
    if !current.is_empty() {
        batches.push(current);
    }
    batches
}
