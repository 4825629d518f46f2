use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::config::CampaignConfig;
use super::plot::throughput_svg;
use crate::corpus::{stage_archives, synth_corpus, write_archives, DocumentRecord, StagedCorpus};
use crate::hash::{fnv1a64, mix, unit_interval};
use crate::jsonl::read_jsonl;
use crate::metrics::{win_rate, PreferenceRecord};
use crate::parsers::{MockModel, ParserProfile};
use crate::scheduler::{
    quality_summary, read_manifest, throughput_sweep, BenchRow, Campaign, CampaignReport, ManifestRecord, ManifestStage,
    Strategy,
};
use crate::selector::{MetadataClassifier, PredictorModel};
use crate::training::{document_examples_from, mean_r_squared, train_from_corpus};
use crate::{Error, Result};

/// Writes `n` synthetic documents as zip archives into `pdf_dir`.
pub fn synthesize(cfg: &CampaignConfig, n: usize) -> Result<Vec<PathBuf>> {
    let docs = synth_corpus(n, &cfg.synth, cfg.seed)?;
    write_archives(&cfg.pdf_dir, &docs, 100)
}

fn archives(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "zip"))
        .collect();
    out.sort();
    if out.is_empty() {
        return Err(Error::NoDocuments(format!("no .zip archives in {}", dir.display())));
    }
    Ok(out)
}

/// Stages every archive in `pdf_dir` into `out_dir/staged`.
pub fn cmd_stage(cfg: &CampaignConfig) -> Result<StagedCorpus> {
    cfg.check_dirs()?;
    let staged = stage_archives(&archives(&cfg.pdf_dir)?, &cfg.staged_dir())?;
    log::info!("staged {} documents, skipped {}", staged.len(), staged.skipped());
    Ok(staged)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub train_docs: usize,
    pub held_out_docs: usize,
    /// Held-out mean R² of document accuracy after each step.
    pub r_squared: [f64; 3],
    pub weights_path: PathBuf,
    pub cls2_path: PathBuf,
}

/// Trains on a hashed 80% of the staged corpus and reports R² on the rest.
pub fn cmd_train(cfg: &CampaignConfig) -> Result<TrainSummary> {
    let staged = cmd_stage(cfg)?;
    let parsers = cfg.parser_set()?;
    let (train, held): (Vec<Arc<DocumentRecord>>, Vec<Arc<DocumentRecord>>) = staged
        .docs()
        .iter()
        .cloned()
        .partition(|d| unit_interval(mix(fnv1a64(d.doc_id.as_bytes()), cfg.seed)) < 0.8);
    if train.is_empty() || held.is_empty() {
        return Err(Error::InsufficientData(format!("{} documents are too few to split", staged.len())));
    }
    let mut tc = cfg.train.clone();
    tc.train.seed = cfg.seed;
    let models = train_from_corpus(&train, &parsers, &cfg.metric, &tc)?;
    let matrix = crate::selector::accuracy_matrix(&held, &parsers, &cfg.metric)?;
    let held_data = document_examples_from(&held, &matrix, &parsers);
    let p = &models.pipeline;
    let r_squared = [
        mean_r_squared(&p.stage1, &held_data)?,
        mean_r_squared(&p.stage2, &held_data)?,
        mean_r_squared(&p.stage3, &held_data)?,
    ];
    let (weights_path, cls2_path) = (cfg.weights_path(), cfg.cls2_path());
    for path in [&weights_path, &cls2_path] {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
    }
    p.stage3.save(&weights_path)?;
    std::fs::write(&cls2_path, serde_json::to_string(&models.cls2)?)?;
    let summary = TrainSummary { train_docs: train.len(), held_out_docs: held.len(), r_squared, weights_path, cls2_path };
    std::fs::write(cfg.model_dir().join("train_report.json"), serde_json::to_string_pretty(&summary)?)?;
    Ok(summary)
}

fn load_cls2(path: &Path) -> Result<MetadataClassifier> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::from(e).context(path.display().to_string()))?;
    Ok(serde_json::from_str(&text)?)
}

/// Runs the configured campaign and writes manifest, texts and reports to `out_dir`.
pub fn cmd_run(cfg: &CampaignConfig) -> Result<CampaignReport> {
    let staged = cmd_stage(cfg)?;
    let parsers = cfg.parser_set()?;
    let opts = cfg.campaign_options();
    let strategy = opts.strategy.clone();
    let mut campaign = Campaign::new(&parsers, opts).with_manifest(cfg.manifest_path());
    if cfg.keep_text {
        campaign = campaign.with_texts(cfg.out_dir.join("texts.jsonl"));
    }
    match strategy {
        Strategy::AdaparseLlm => {
            let path = cfg.weights_path();
            let model = PredictorModel::load(&path).map_err(|e| e.context(format!("loading {}", path.display())))?;
            campaign = campaign.with_predictor(Arc::new(model));
        }
        Strategy::AdaparseFt => campaign = campaign.with_cls2(load_cls2(&cfg.cls2_path())?),
        Strategy::Single(_) => {}
    }
    let out = campaign.run(staged.docs())?;
    std::fs::write(cfg.out_dir.join("report.json"), serde_json::to_string_pretty(&out.report)?)?;
    std::fs::write(cfg.out_dir.join("report.txt"), out.report.to_table())?;
    Ok(out.report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub label: String,
    pub docs: usize,
    pub coverage: f64,
    pub bleu: f64,
    pub rouge: f64,
    pub car: f64,
    pub win_rate: Option<f64>,
    pub accepted_tokens: Option<f64>,
}

/// Names a manifest by what it contains: the parser id of a single-parser
/// run, otherwise the adaptive strategy.
pub fn manifest_label(records: &[ManifestRecord]) -> String {
    let direct = records.iter().all(|r| r.stage == ManifestStage::Direct);
    match records.first() {
        Some(first) if direct && records.iter().all(|r| r.parser_id == first.parser_id) => first.parser_id.clone(),
        _ if records.iter().any(|r| r.stage == ManifestStage::Cls3Routed) => "adaparse_llm".into(),
        _ => "adaparse_ft".into(),
    }
}

/// One row from a manifest and corpus groundtruth token counts.
pub fn eval_row(
    records: &[ManifestRecord],
    docs: &[Arc<DocumentRecord>],
    preferences: Option<&[PreferenceRecord]>,
    at_threshold: f64,
) -> Result<EvalRow> {
    let label = manifest_label(records);
    let tokens = docs.iter().map(|d| (d.doc_id.clone(), d.token_count)).collect();
    let q = quality_summary(records, &tokens, at_threshold)
        .ok_or_else(|| Error::Precondition(format!("manifest `{label}` carries no scores")))?;
    let win_rate = preferences.and_then(|p| win_rate(p, &label).ok());
    Ok(EvalRow {
        label,
        docs: q.docs,
        coverage: q.coverage,
        bleu: q.bleu,
        rouge: q.rouge,
        car: q.car,
        win_rate,
        accepted_tokens: q.accepted_tokens,
    })
}

pub fn eval_table(rows: &[EvalRow]) -> String {
    let pct = |v: Option<f64>| v.map_or("--".to_owned(), |v| format!("{:.1}", 100.0 * v));
    let mut s = format!(
        "{:<16} {:>8} {:>6} {:>6} {:>6} {:>6} {:>6}\n",
        "parser", "coverage", "bleu", "rouge", "car", "wr", "at"
    );
    for r in rows {
        s.push_str(&format!(
            "{:<16} {:>8.1} {:>6.1} {:>6.1} {:>6.1} {:>6} {:>6}\n",
            r.label,
            100.0 * r.coverage,
            100.0 * r.bleu,
            100.0 * r.rouge,
            100.0 * r.car,
            pct(r.win_rate),
            pct(r.accepted_tokens)
        ));
    }
    s
}

/// Evaluates manifests (default: the configured one) against the staged
/// corpus and writes `eval.txt` and `eval.csv`.
pub fn cmd_eval(cfg: &CampaignConfig, manifests: &[PathBuf], preferences: Option<&Path>) -> Result<Vec<EvalRow>> {
    let staged = cmd_stage(cfg)?;
    let prefs: Option<Vec<PreferenceRecord>> = preferences.map(read_jsonl).transpose()?;
    let paths = if manifests.is_empty() { vec![cfg.manifest_path()] } else { manifests.to_vec() };
    let rows = paths
        .iter()
        .map(|p| {
            let records = read_manifest(p).map_err(|e| e.context(p.display().to_string()))?;
            eval_row(&records, staged.docs(), prefs.as_deref(), cfg.metric.at_threshold)
                .map_err(|e| e.context(p.display().to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    std::fs::write(cfg.out_dir.join("eval.txt"), eval_table(&rows))?;
    let mut w = csv::Writer::from_path(cfg.out_dir.join("eval.csv"))?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(rows)
}

/// CPU-bound mock used by the throughput benchmark when the configured
/// parser is not itself a mock or builtin.
pub fn bench_profile() -> ParserProfile {
    ParserProfile::mock("cpu-mock", 1.0, MockModel::perfect())
}

/// Sweeps worker counts over `docs` synthetic documents and writes
/// `bench.csv` and, if asked, `bench.svg`.
pub fn cmd_bench(
    cfg: &CampaignConfig,
    worker_counts: &[usize],
    docs: usize,
    spin_scale: f64,
    svg: bool,
) -> Result<Vec<BenchRow>> {
    std::fs::create_dir_all(&cfg.out_dir)?;
    let corpus: Vec<Arc<DocumentRecord>> = synth_corpus(docs, &cfg.synth, cfg.seed)?.into_iter().map(Arc::new).collect();
    let parsers = cfg.parser_set()?;
    let profile = match cfg.strategy() {
        Strategy::Single(id) => parsers.get(&id)?.clone(),
        _ => parsers.heavy_parser().clone(),
    };
    let profile = if profile.is_deterministic() { profile } else { bench_profile() };
    let rows = throughput_sweep(&corpus, &profile, worker_counts, spin_scale)?;
    let mut w = csv::Writer::from_path(cfg.out_dir.join("bench.csv"))?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;
    if svg {
        std::fs::write(cfg.out_dir.join("bench.svg"), throughput_svg(&rows, &profile.parser_id))?;
    }
    Ok(rows)
}
