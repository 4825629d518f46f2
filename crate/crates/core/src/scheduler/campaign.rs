//! Parallel campaign executor.
//!
//! A planner thread probes each batch's first pages, routes and caps it, and
//! hands the plan over a one-slot channel, so the next batch is probed while
//! the current one is parsing. The calling thread dispatches plans to one
//! bounded pool per parser. A single writer thread receives completions and
//! appends manifest lines in document order.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{LineWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicU8, Ordering};
use std::sync::Arc;
use std::time::Instant;

use crossbeam_channel::{bounded, Receiver, Sender};
use serde::{Deserialize, Serialize};

use super::plan::{plan_batch, BatchPlan};
use crate::corpus::DocumentRecord;
use crate::metrics::{accepted_tokens, MetricConfig, QualityScores};
use crate::parsers::{
    parse_first_page, Completed, Job, ParseStatus, ParserSet, PoolConfig, PoolStats, ProfileWorkerFactory, Scorer,
    WorkerFactory, WorkerPool, DEFAULT_PARSER,
};
use crate::selector::{
    check_alpha, heavy_cap, route_ft, route_llm, select_heavy, AccuracyPredictor, Candidate, MetadataClassifier, Probe,
    RouteStage, ValidityThresholds,
};
use crate::{Error, Result};

pub const DEFAULT_BATCH_SIZE: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Strategy {
    Single(String),
    AdaparseFt,
    AdaparseLlm,
}

impl Strategy {
    pub fn is_adaptive(&self) -> bool {
        !matches!(self, Strategy::Single(_))
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "adaparse_ft" => Ok(Strategy::AdaparseFt),
            "adaparse_llm" => Ok(Strategy::AdaparseLlm),
            other => match other.strip_prefix("single:") {
                Some(id) if !id.is_empty() => Ok(Strategy::Single(id.to_owned())),
                _ => Err(Error::Config(format!(
                    "unknown strategy `{other}` (expected single:<parser_id>, adaparse_ft or adaparse_llm)"
                ))),
            },
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Single(id) => write!(f, "single:{id}"),
            Strategy::AdaparseFt => f.write_str("adaparse_ft"),
            Strategy::AdaparseLlm => f.write_str("adaparse_llm"),
        }
    }
}

impl TryFrom<String> for Strategy {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Strategy> for String {
    fn from(s: Strategy) -> String {
        s.to_string()
    }
}

/// How a document reached its parser. `direct` means a single-parser run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManifestStage {
    Direct,
    Cls1Invalid,
    Cls2Accept,
    Cls2Escalate,
    Cls3Routed,
}

impl ManifestStage {
    const ALL: [ManifestStage; 5] = [
        ManifestStage::Direct,
        ManifestStage::Cls1Invalid,
        ManifestStage::Cls2Accept,
        ManifestStage::Cls2Escalate,
        ManifestStage::Cls3Routed,
    ];

    fn code(self) -> u8 {
        self as u8
    }

    fn from_code(c: u8) -> Self {
        Self::ALL[c as usize]
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ManifestStage::Direct => "direct",
            ManifestStage::Cls1Invalid => "cls1_invalid",
            ManifestStage::Cls2Accept => "cls2_accept",
            ManifestStage::Cls2Escalate => "cls2_escalate",
            ManifestStage::Cls3Routed => "cls3_routed",
        }
    }
}

impl From<RouteStage> for ManifestStage {
    fn from(s: RouteStage) -> Self {
        match s {
            RouteStage::Cls1Invalid => ManifestStage::Cls1Invalid,
            RouteStage::Cls2Accept => ManifestStage::Cls2Accept,
            RouteStage::Cls2Escalate => ManifestStage::Cls2Escalate,
            RouteStage::Cls3Routed => ManifestStage::Cls3Routed,
        }
    }
}

/// One manifest line. Metric fields are present when the document has groundtruth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub doc_id: String,
    pub parser_id: String,
    pub stage: ManifestStage,
    pub status: ParseStatus,
    pub wall_seconds: f64,
    pub pages_emitted: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bleu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rouge: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub car: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coverage: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TextRecord<'a> {
    doc_id: &'a str,
    parser_id: &'a str,
    text: &'a str,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CampaignOptions {
    pub strategy: Strategy,
    pub alpha: f64,
    pub batch_size: usize,
    /// Workers per parser pool unless overridden.
    pub workers: usize,
    pub worker_overrides: BTreeMap<String, usize>,
    pub metric: MetricConfig,
    pub thresholds: ValidityThresholds,
    /// Burn `scale * modeled seconds` of CPU per parse (0 = no spinning).
    pub spin_scale: f64,
    pub budget_seconds: Option<f64>,
}

impl Default for CampaignOptions {
    fn default() -> Self {
        CampaignOptions {
            strategy: Strategy::Single(DEFAULT_PARSER.to_owned()),
            alpha: 0.05,
            batch_size: DEFAULT_BATCH_SIZE,
            workers: 1,
            worker_overrides: BTreeMap::new(),
            metric: MetricConfig::default(),
            thresholds: ValidityThresholds::default(),
            spin_scale: 0.0,
            budget_seconds: None,
        }
    }
}

impl CampaignOptions {
    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        self.metric.validate()?;
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if self.workers == 0 || self.worker_overrides.values().any(|&w| w == 0) {
            return Err(Error::Config("worker counts must be at least 1".into()));
        }
        if !(self.spin_scale >= 0.0) {
            return Err(Error::Config(format!("spin_scale must be nonnegative, got {}", self.spin_scale)));
        }
        if let Some(b) = self.budget_seconds {
            if !(b > 0.0) {
                return Err(Error::Config(format!("budget must be positive, got {b}")));
            }
        }
        Ok(())
    }

    pub fn workers_for(&self, parser_id: &str) -> usize {
        self.worker_overrides.get(parser_id).copied().unwrap_or(self.workers)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParserSummary {
    pub docs: usize,
    pub ok: usize,
    pub partial: usize,
    pub failed: usize,
    pub timeout: usize,
    pub modeled_seconds: f64,
    pub mean_bleu: Option<f64>,
}

/// Corpus-level quality over documents that carry groundtruth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualitySummary {
    pub docs: usize,
    pub coverage: f64,
    pub bleu: f64,
    pub rouge: f64,
    pub car: f64,
    pub accepted_tokens: Option<f64>,
}

/// Averages manifest metrics. Accepted tokens weight each document by its
/// groundtruth token count from `token_counts`.
pub fn quality_summary(
    records: &[ManifestRecord],
    token_counts: &HashMap<String, u64>,
    at_threshold: f64,
) -> Option<QualitySummary> {
    let scored: Vec<&ManifestRecord> = records.iter().filter(|r| r.bleu.is_some()).collect();
    if scored.is_empty() {
        return None;
    }
    let n = scored.len() as f64;
    let mean = |f: fn(&ManifestRecord) -> Option<f64>| scored.iter().filter_map(|r| f(r)).sum::<f64>() / n;
    let per_doc: Vec<(u64, f64)> = scored
        .iter()
        .filter_map(|r| Some((*token_counts.get(&r.doc_id)?, r.bleu?)))
        .collect();
    Some(QualitySummary {
        docs: scored.len(),
        coverage: mean(|r| r.coverage),
        bleu: mean(|r| r.bleu),
        rouge: mean(|r| r.rouge),
        car: mean(|r| r.car),
        accepted_tokens: accepted_tokens(&per_doc, at_threshold).ok(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub strategy: String,
    pub alpha: f64,
    pub batch_size: usize,
    pub n_docs: usize,
    pub batches: usize,
    pub per_parser: BTreeMap<String, ParserSummary>,
    pub stage_counts: BTreeMap<String, usize>,
    pub heavy_parser: String,
    pub heavy_docs: usize,
    pub heavy_fraction: f64,
    pub max_batch_heavy: usize,
    /// Measured wall time of the whole campaign.
    pub wall_seconds: f64,
    pub throughput_docs_per_second: f64,
    /// Modeled cost of first-page probes.
    pub probe_seconds: f64,
    /// Modeled cost of full parses.
    pub parse_seconds: f64,
    /// Probe plus parse cost; compared against the budget, not enforced.
    pub modeled_seconds: f64,
    pub budget_seconds: Option<f64>,
    pub within_budget: Option<bool>,
    /// Mean per-document expected accuracy lost by capping each batch
    /// instead of the whole corpus at once (adaparse_llm only).
    pub optimality_gap: Option<f64>,
    pub quality: Option<QualitySummary>,
    pub pools: BTreeMap<String, PoolStats>,
}

impl CampaignReport {
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!(
            "strategy {}  alpha {}  k {}  docs {}  batches {}\n",
            self.strategy, self.alpha, self.batch_size, self.n_docs, self.batches
        ));
        s.push_str(&format!(
            "{:<14} {:>7} {:>7} {:>8} {:>7} {:>8} {:>11} {:>9}\n",
            "parser", "docs", "ok", "partial", "failed", "timeout", "modeled_s", "bleu"
        ));
        for (id, p) in &self.per_parser {
            let bleu = p.mean_bleu.map_or("--".to_owned(), |b| format!("{:.1}", 100.0 * b));
            s.push_str(&format!(
                "{:<14} {:>7} {:>7} {:>8} {:>7} {:>8} {:>11.2} {:>9}\n",
                id, p.docs, p.ok, p.partial, p.failed, p.timeout, p.modeled_seconds, bleu
            ));
        }
        s.push_str(&format!(
            "heavy ({}) {} docs = {:.2}%  max per batch {}\n",
            self.heavy_parser,
            self.heavy_docs,
            100.0 * self.heavy_fraction,
            self.max_batch_heavy
        ));
        s.push_str(&format!(
            "wall {:.3} s  throughput {:.1} docs/s  modeled {:.2} s (probe {:.2} s)",
            self.wall_seconds, self.throughput_docs_per_second, self.modeled_seconds, self.probe_seconds
        ));
        if let Some(b) = self.budget_seconds {
            s.push_str(&format!("  budget {b:.2} s"));
        }
        s.push('\n');
        if let Some(gap) = self.optimality_gap {
            s.push_str(&format!("per-batch optimality gap {gap:.6}\n"));
        }
        if let Some(q) = &self.quality {
            s.push_str(&format!(
                "coverage {:.1}  bleu {:.1}  rouge {:.1}  car {:.1}",
                100.0 * q.coverage,
                100.0 * q.bleu,
                100.0 * q.rouge,
                100.0 * q.car
            ));
            if let Some(at) = q.accepted_tokens {
                s.push_str(&format!("  at {:.1}", 100.0 * at));
            }
            s.push('\n');
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct CampaignOutcome {
    pub report: CampaignReport,
    /// Manifest records in document order.
    pub records: Vec<ManifestRecord>,
    pub plans: Vec<BatchPlan>,
}

struct GapEntry {
    doc_id: String,
    forced: bool,
    gain: f64,
    heavy: bool,
}

struct BatchMsg {
    start: usize,
    plan: BatchPlan,
    stages: Vec<ManifestStage>,
    probe_seconds: f64,
    gap: Vec<GapEntry>,
}

/// A configured campaign over one parser set.
pub struct Campaign<'a> {
    parsers: &'a ParserSet,
    options: CampaignOptions,
    predictor: Option<Arc<dyn AccuracyPredictor>>,
    cls2: Option<MetadataClassifier>,
    factories: HashMap<String, Arc<dyn WorkerFactory>>,
    manifest_path: Option<PathBuf>,
    texts_path: Option<PathBuf>,
}

impl<'a> Campaign<'a> {
    pub fn new(parsers: &'a ParserSet, options: CampaignOptions) -> Self {
        Campaign {
            parsers,
            options,
            predictor: None,
            cls2: None,
            factories: HashMap::new(),
            manifest_path: None,
            texts_path: None,
        }
    }

    pub fn with_predictor(mut self, predictor: Arc<dyn AccuracyPredictor>) -> Self {
        self.predictor = Some(predictor);
        self
    }

    pub fn with_cls2(mut self, model: MetadataClassifier) -> Self {
        self.cls2 = Some(model);
        self
    }

    /// Replaces the worker factory used for `parser_id`.
    pub fn with_factory(mut self, factory: Arc<dyn WorkerFactory>) -> Self {
        self.factories.insert(factory.parser_id().to_owned(), factory);
        self
    }

    pub fn with_manifest(mut self, path: impl Into<PathBuf>) -> Self {
        self.manifest_path = Some(path.into());
        self
    }

    /// Also writes the parsed text of every document as JSON lines.
    pub fn with_texts(mut self, path: impl Into<PathBuf>) -> Self {
        self.texts_path = Some(path.into());
        self
    }

    pub fn options(&self) -> &CampaignOptions {
        &self.options
    }

    fn check(&self, docs: &[Arc<DocumentRecord>]) -> Result<()> {
        self.options.validate()?;
        if docs.is_empty() {
            return Err(Error::NoDocuments("campaign over an empty corpus".into()));
        }
        match &self.options.strategy {
            Strategy::Single(id) => {
                self.parsers.get(id)?;
            }
            Strategy::AdaparseFt if self.cls2.is_none() => {
                return Err(Error::Config("adaparse_ft needs a metadata classifier".into()))
            }
            Strategy::AdaparseLlm => match &self.predictor {
                None => return Err(Error::Config("adaparse_llm needs an accuracy predictor".into())),
                Some(p) if p.outputs() != self.parsers.len() => {
                    return Err(Error::DimensionMismatch { expected: self.parsers.len(), got: p.outputs() })
                }
                _ => {}
            },
            _ => {}
        }
        Ok(())
    }

    fn pool_ids(&self) -> Vec<String> {
        match &self.options.strategy {
            Strategy::Single(id) => vec![id.clone()],
            _ => vec![
                self.parsers.default_parser().parser_id.clone(),
                self.parsers.heavy_parser().parser_id.clone(),
            ],
        }
    }

    fn plan_one(&self, batch_id: usize, start: usize, docs: &[Arc<DocumentRecord>]) -> Result<BatchMsg> {
        let opts = &self.options;
        let parsers = self.parsers;
        if let Strategy::Single(id) = &opts.strategy {
            return Ok(BatchMsg {
                start,
                plan: BatchPlan {
                    batch_id,
                    assignments: docs.iter().map(|d| (d.doc_id.clone(), id.clone())).collect(),
                    heavy_count: if *id == parsers.heavy_parser().parser_id { docs.len() } else { 0 },
                    cap: docs.len(),
                    expected_accuracy: None,
                },
                stages: vec![ManifestStage::Direct; docs.len()],
                probe_seconds: 0.0,
                gap: Vec::new(),
            });
        }
        let default = parsers.default_parser();
        let mut probe_seconds = 0.0;
        let probes: Vec<Probe> = docs
            .iter()
            .map(|d| {
                let fp = parse_first_page(default, d);
                probe_seconds += fp.wall_seconds;
                Probe::new(Arc::clone(d), fp.text)
            })
            .collect();
        let mut decisions = match &opts.strategy {
            Strategy::AdaparseFt => {
                let cls2 = self.cls2.as_ref().expect("checked");
                probes.iter().map(|p| route_ft(p, &opts.thresholds, cls2, parsers)).collect()
            }
            _ => {
                let predictor = self.predictor.as_deref().expect("checked");
                route_llm(&probes, predictor, opts.alpha, &opts.thresholds, parsers)
                    .map_err(|e| e.context(format!("routing batch {batch_id}")))?
            }
        };
        let plan = plan_batch(batch_id, &mut decisions, opts.alpha, parsers)
            .map_err(|e| e.context(format!("planning batch {batch_id}")))?;
        let heavy = &parsers.heavy_parser().parser_id;
        let gap = if opts.strategy == Strategy::AdaparseLlm {
            decisions
                .iter()
                .map(|d| GapEntry {
                    doc_id: d.doc_id.clone(),
                    forced: d.stage == RouteStage::Cls1Invalid,
                    gain: if d.stage == RouteStage::Cls1Invalid { 0.0 } else { d.priority },
                    heavy: d.chosen_parser == *heavy,
                })
                .collect()
        } else {
            Vec::new()
        };
        Ok(BatchMsg {
            start,
            plan,
            stages: decisions.iter().map(|d| d.stage.into()).collect(),
            probe_seconds,
            gap,
        })
    }

    fn planner(&self, docs: &[Arc<DocumentRecord>], tx: Sender<Result<BatchMsg>>) {
        for (batch_id, chunk) in docs.chunks(self.options.batch_size).enumerate() {
            let msg = self.plan_one(batch_id, batch_id * self.options.batch_size, chunk);
            let failed = msg.is_err();
            if tx.send(msg).is_err() || failed {
                return;
            }
        }
    }

    fn writer(
        &self,
        docs: &[Arc<DocumentRecord>],
        stages: &[AtomicU8],
        rx: Receiver<Completed>,
    ) -> Result<Vec<ManifestRecord>> {
        let open = |p: &Option<PathBuf>| -> Result<Option<LineWriter<File>>> {
            p.as_ref()
                .map(|p| {
                    if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                        std::fs::create_dir_all(dir)?;
                    }
                    Ok(LineWriter::new(File::create(p)?))
                })
                .transpose()
        };
        let mut manifest = open(&self.manifest_path)?;
        let mut texts = open(&self.texts_path)?;
        let mut pending: BTreeMap<u64, Completed> = BTreeMap::new();
        let mut records = Vec::with_capacity(docs.len());
        let mut next = 0u64;
        let mut emit = |c: Completed, records: &mut Vec<ManifestRecord>| -> Result<()> {
            let idx = c.tag as usize;
            let stage = ManifestStage::from_code(stages[idx].load(Ordering::SeqCst));
            let q: Option<QualityScores> = c.scores;
            let rec = ManifestRecord {
                doc_id: docs[idx].doc_id.clone(),
                parser_id: c.result.parser_id.clone(),
                stage,
                status: c.result.status,
                wall_seconds: c.result.wall_seconds,
                pages_emitted: c.result.pages_emitted,
                bleu: q.map(|q| q.bleu),
                rouge: q.map(|q| q.rouge),
                car: q.map(|q| q.car),
                coverage: q.map(|q| q.coverage),
            };
            if let Some(w) = manifest.as_mut() {
                let mut line = serde_json::to_string(&rec)?;
                line.push('\n');
                w.write_all(line.as_bytes())?;
            }
            if let Some(w) = texts.as_mut() {
                let mut line = serde_json::to_string(&TextRecord {
                    doc_id: &rec.doc_id,
                    parser_id: &rec.parser_id,
                    text: &c.result.text,
                })?;
                line.push('\n');
                w.write_all(line.as_bytes())?;
            }
            records.push(rec);
            Ok(())
        };
        for c in rx.iter() {
            pending.insert(c.tag, c);
            while let Some(c) = pending.remove(&next) {
                emit(c, &mut records)?;
                next += 1;
            }
        }
        // Gaps only arise when a pool died; keep what arrived, in order.
        for (_, c) in std::mem::take(&mut pending) {
            emit(c, &mut records)?;
        }
        Ok(records)
    }

    pub fn run(&self, docs: &[Arc<DocumentRecord>]) -> Result<CampaignOutcome> {
        self.check(docs)?;
        let opts = &self.options;
        let started = Instant::now();
        let metric = opts.metric.clone();
        let scorer: Scorer = Arc::new(move |doc: &DocumentRecord, res| {
            let gt = doc.groundtruth.as_deref()?;
            QualityScores::compute(&res.text, gt, doc.page_count(), &metric).ok()
        });
        let pool_ids = self.pool_ids();
        let total_workers: usize = pool_ids.iter().map(|id| opts.workers_for(id)).sum();
        let (done_tx, done_rx) = bounded::<Completed>(2 * total_workers + 2);
        let mut pools: HashMap<String, WorkerPool> = HashMap::new();
        for id in &pool_ids {
            let factory: Arc<dyn WorkerFactory> = match self.factories.get(id) {
                Some(f) => Arc::clone(f),
                None => Arc::new(ProfileWorkerFactory::new(self.parsers.get(id)?.clone()).with_spin_scale(opts.spin_scale)),
            };
            let cfg = PoolConfig::new(opts.workers_for(id));
            pools.insert(id.clone(), WorkerPool::start_scored(factory, cfg, done_tx.clone(), Some(Arc::clone(&scorer))));
        }
        drop(done_tx);
        let stages: Vec<AtomicU8> = docs.iter().map(|_| AtomicU8::new(0)).collect();

        let (plans, probe_seconds, gap, dispatch_err, pool_stats, records) = std::thread::scope(|s| {
            let (plan_tx, plan_rx) = bounded::<Result<BatchMsg>>(1);
            let planner = s.spawn(move || self.planner(docs, plan_tx));
            let writer = s.spawn(|| self.writer(docs, &stages, done_rx));

            let mut plans = Vec::new();
            let mut probe_seconds = 0.0;
            let mut gap = Vec::new();
            let mut err: Option<Error> = None;
            'batches: for msg in plan_rx.iter() {
                let msg = match msg {
                    Ok(m) => m,
                    Err(e) => {
                        err = Some(e);
                        break;
                    }
                };
                for (i, (_, parser_id)) in msg.plan.assignments.iter().enumerate() {
                    let idx = msg.start + i;
                    stages[idx].store(msg.stages[i].code(), Ordering::SeqCst);
                    let pool = &pools[parser_id];
                    if let Err(e) = pool.submit(Job { tag: idx as u64, doc: Arc::clone(&docs[idx]) }) {
                        err = Some(e.context(format!("batch {}, doc {}", msg.plan.batch_id, docs[idx].doc_id)));
                        break 'batches;
                    }
                }
                probe_seconds += msg.probe_seconds;
                gap.extend(msg.gap);
                plans.push(msg.plan);
            }
            drop(plan_rx);
            let pool_stats: BTreeMap<String, PoolStats> =
                pools.drain().map(|(id, pool)| (id, pool.close())).collect();
            planner.join().expect("planner thread panicked");
            let records = writer.join().expect("writer thread panicked");
            (plans, probe_seconds, gap, err, pool_stats, records)
        });
        if let Some(e) = dispatch_err {
            return Err(e);
        }
        let records = records?;
        if records.len() != docs.len() {
            let dead: Vec<&str> = pool_stats
                .iter()
                .filter(|(_, s)| s.alive_workers == 0)
                .map(|(id, _)| id.as_str())
                .collect();
            return Err(Error::PoolExhausted(dead.join(",")).context(format!(
                "{} of {} documents produced no result",
                docs.len() - records.len(),
                docs.len()
            )));
        }
        let wall_seconds = started.elapsed().as_secs_f64();
        Ok(CampaignOutcome {
            report: self.report(docs, &records, &plans, probe_seconds, &gap, pool_stats, wall_seconds),
            records,
            plans,
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn report(
        &self,
        docs: &[Arc<DocumentRecord>],
        records: &[ManifestRecord],
        plans: &[BatchPlan],
        probe_seconds: f64,
        gap: &[GapEntry],
        pools: BTreeMap<String, PoolStats>,
        wall_seconds: f64,
    ) -> CampaignReport {
        let opts = &self.options;
        let heavy_id = self.parsers.heavy_parser().parser_id.clone();
        let mut per_parser: BTreeMap<String, ParserSummary> = BTreeMap::new();
        let mut bleu_sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
        let mut stage_counts: BTreeMap<String, usize> = BTreeMap::new();
        for r in records {
            let p = per_parser.entry(r.parser_id.clone()).or_default();
            p.docs += 1;
            p.modeled_seconds += r.wall_seconds;
            match r.status {
                ParseStatus::Ok => p.ok += 1,
                ParseStatus::Partial => p.partial += 1,
                ParseStatus::Failed => p.failed += 1,
                ParseStatus::Timeout => p.timeout += 1,
            }
            if let Some(b) = r.bleu {
                let e = bleu_sums.entry(r.parser_id.clone()).or_default();
                e.0 += b;
                e.1 += 1;
            }
            *stage_counts.entry(r.stage.as_str().to_owned()).or_default() += 1;
        }
        for (id, (sum, n)) in bleu_sums {
            if let Some(p) = per_parser.get_mut(&id) {
                p.mean_bleu = Some(sum / n as f64);
            }
        }
        let heavy_docs = per_parser.get(&heavy_id).map_or(0, |p| p.docs);
        let parse_seconds: f64 = records.iter().map(|r| r.wall_seconds).sum();
        let modeled_seconds = probe_seconds + parse_seconds;
        let tokens: HashMap<String, u64> = docs.iter().map(|d| (d.doc_id.clone(), d.token_count)).collect();
        CampaignReport {
            strategy: opts.strategy.to_string(),
            alpha: opts.alpha,
            batch_size: opts.batch_size,
            n_docs: docs.len(),
            batches: plans.len(),
            per_parser,
            stage_counts,
            heavy_parser: heavy_id,
            heavy_docs,
            heavy_fraction: heavy_docs as f64 / docs.len() as f64,
            max_batch_heavy: plans.iter().map(|p| p.heavy_count).max().unwrap_or(0),
            wall_seconds,
            throughput_docs_per_second: docs.len() as f64 / wall_seconds.max(1e-9),
            probe_seconds,
            parse_seconds,
            modeled_seconds,
            budget_seconds: opts.budget_seconds,
            within_budget: opts.budget_seconds.map(|b| modeled_seconds <= b),
            optimality_gap: (!gap.is_empty()).then(|| optimality_gap(gap, opts.alpha)),
            quality: quality_summary(records, &tokens, opts.metric.at_threshold),
            pools,
        }
    }
}

/// Expected gain of capping over the whole corpus at once minus the gain
/// realized by per-batch capping, averaged over documents.
fn optimality_gap(entries: &[GapEntry], alpha: f64) -> f64 {
    let realized: f64 = entries.iter().filter(|e| e.heavy).map(|e| e.gain).sum();
    let candidates: Vec<Candidate> = entries
        .iter()
        .map(|e| Candidate { doc_id: &e.doc_id, forced: e.forced, priority: e.gain })
        .collect();
    let cap = heavy_cap(alpha, entries.len()).unwrap_or(0);
    let global: f64 = select_heavy(&candidates, cap)
        .into_iter()
        .zip(entries)
        .filter(|(h, _)| *h)
        .map(|(_, e)| e.gain)
        .sum();
    (global - realized) / entries.len() as f64
}

/// Runs a campaign with default hooks and no files.
pub fn run_campaign(
    docs: &[Arc<DocumentRecord>],
    parsers: &ParserSet,
    options: CampaignOptions,
    predictor: Option<Arc<dyn AccuracyPredictor>>,
) -> Result<CampaignOutcome> {
    let mut c = Campaign::new(parsers, options);
    if let Some(p) = predictor {
        c = c.with_predictor(p);
    }
    c.run(docs)
}

/// Reads a manifest written by a campaign.
pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRecord>> {
    crate::jsonl::read_jsonl(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{synth_corpus, SynthProfile};
    use crate::parsers::{reference_parsers, MockModel, ParserProfile};
    use crate::selector::OraclePredictor;

    fn corpus(n: usize, seed: u64) -> Vec<Arc<DocumentRecord>> {
        synth_corpus(n, &SynthProfile::compact(), seed).unwrap().into_iter().map(Arc::new).collect()
    }

    #[test]
    fn strategy_parsing() {
        assert_eq!("single:vit".parse::<Strategy>().unwrap(), Strategy::Single("vit".into()));
        assert_eq!("adaparse_llm".parse::<Strategy>().unwrap(), Strategy::AdaparseLlm);
        assert!("single:".parse::<Strategy>().is_err());
        assert!("nougat".parse::<Strategy>().is_err());
        let s: Strategy = serde_json::from_str("\"adaparse_ft\"").unwrap();
        assert_eq!(serde_json::to_string(&s).unwrap(), "\"adaparse_ft\"");
    }

    #[test]
    fn perfect_single_parser_scores_one() {
        let mut parsers = reference_parsers();
        parsers.upsert(ParserProfile::mock("perfect", 0.5, MockModel::perfect())).unwrap();
        let docs = corpus(60, 3);
        let opts = CampaignOptions { strategy: Strategy::Single("perfect".into()), batch_size: 16, ..Default::default() };
        let out = run_campaign(&docs, &parsers, opts, None).unwrap();
        assert_eq!(out.records.len(), 60);
        assert!(out.records.iter().all(|r| r.status == ParseStatus::Ok && r.bleu == Some(1.0)));
        assert_eq!(out.report.quality.as_ref().unwrap().bleu, 1.0);
        let ids: Vec<&str> = out.records.iter().map(|r| r.doc_id.as_str()).collect();
        let want: Vec<&str> = docs.iter().map(|d| d.doc_id.as_str()).collect();
        assert_eq!(ids, want);
    }

    #[test]
    fn adaptive_respects_cap_on_every_batch() {
        let parsers = reference_parsers();
        let docs = corpus(120, 5);
        let oracle = OraclePredictor::from_corpus(&docs, &parsers, &MetricConfig::default()).unwrap();
        let opts = CampaignOptions { strategy: Strategy::AdaparseLlm, alpha: 0.1, batch_size: 25, workers: 2, ..Default::default() };
        let out = run_campaign(&docs, &parsers, opts, Some(Arc::new(oracle))).unwrap();
        assert_eq!(out.plans.len(), 5);
        for p in &out.plans {
            assert!(p.heavy_count <= heavy_cap(0.1, p.k()).unwrap());
        }
        assert!(out.report.heavy_fraction <= 0.1 + 1.0 / 20.0);
        assert!(out.report.optimality_gap.is_some());
        assert!(out.report.probe_seconds > 0.0);
    }

    #[test]
    fn missing_predictor_is_a_config_error() {
        let parsers = reference_parsers();
        let opts = CampaignOptions { strategy: Strategy::AdaparseLlm, ..Default::default() };
        assert!(matches!(run_campaign(&corpus(4, 1), &parsers, opts, None), Err(Error::Config(_))));
        assert!(run_campaign(&[], &parsers, CampaignOptions::default(), None).is_err());
    }

    #[test]
    fn manifest_is_deterministic() {
        let parsers = reference_parsers();
        let docs = corpus(40, 9);
        let dir = tempfile::tempdir().unwrap();
        let oracle: Arc<dyn AccuracyPredictor> =
            Arc::new(OraclePredictor::from_corpus(&docs, &parsers, &MetricConfig::default()).unwrap());
        let mut bytes = Vec::new();
        for run in 0..2 {
            let path = dir.path().join(format!("m{run}.jsonl"));
            let opts = CampaignOptions { strategy: Strategy::AdaparseLlm, alpha: 0.2, batch_size: 8, ..Default::default() };
            Campaign::new(&parsers, opts).with_predictor(Arc::clone(&oracle)).with_manifest(&path).run(&docs).unwrap();
            bytes.push(std::fs::read(&path).unwrap());
        }
        assert_eq!(bytes[0], bytes[1]);
        let back = read_manifest(&dir.path().join("m0.jsonl")).unwrap();
        assert_eq!(back.len(), 40);
    }
}
