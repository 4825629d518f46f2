//! Experiment regimes on synthetic corpora and the difficulty ranking.

mod rank;

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{perturb_pages, synth_corpus, DocumentRecord, PerturbationMode, PerturbationSpec, SynthProfile};
use crate::hash::{fnv1a64, mix};
use crate::metrics::{accepted_tokens, MetricConfig, QualityScores};
use crate::parsers::{parse, DocSubset, Engine, ErrorLayer, MockSource, ParserSet};
use crate::scheduler::{Campaign, CampaignOptions, ManifestRecord, Strategy, DEFAULT_BATCH_SIZE};
use crate::selector::{check_alpha, AccuracyPredictor, OraclePredictor};
use crate::training::{train_from_corpus, CorpusModels, CorpusTrainConfig};
use crate::{Error, Result};

pub use rank::{difficulty_rank, rank_from_matrix, write_rank_csv, RankedDoc};

/// Which input a perturbation degrades.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeTarget {
    /// The embedded text layer, seen by text-layer extractors and the probe.
    TextLayer,
    /// The rendered page, seen by parsers that read page images.
    Image,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationStep {
    pub spec: PerturbationSpec,
    pub subset_fraction: f64,
    pub target: RegimeTarget,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum HarnessStrategy {
    Single(String),
    /// Per-batch capped routing with true document BLEU as the prediction.
    Oracle,
    /// Per-batch capped routing with the trained predictor.
    Trained,
    /// Metadata cascade with the trained classifier.
    TrainedFt,
    /// A uniformly random parser per document.
    Random,
    /// The best parser per document, without a budget.
    BleuMax,
}

impl FromStr for HarnessStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "oracle" => HarnessStrategy::Oracle,
            "adaparse_llm" => HarnessStrategy::Trained,
            "adaparse_ft" => HarnessStrategy::TrainedFt,
            "random" => HarnessStrategy::Random,
            "bleu_max" => HarnessStrategy::BleuMax,
            other => match other.strip_prefix("single:") {
                Some(id) if !id.is_empty() => HarnessStrategy::Single(id.to_owned()),
                _ => return Err(Error::Config(format!("unknown harness strategy `{other}`"))),
            },
        })
    }
}

impl fmt::Display for HarnessStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HarnessStrategy::Single(id) => write!(f, "single:{id}"),
            HarnessStrategy::Oracle => f.write_str("oracle"),
            HarnessStrategy::Trained => f.write_str("adaparse_llm"),
            HarnessStrategy::TrainedFt => f.write_str("adaparse_ft"),
            HarnessStrategy::Random => f.write_str("random"),
            HarnessStrategy::BleuMax => f.write_str("bleu_max"),
        }
    }
}

impl TryFrom<String> for HarnessStrategy {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<HarnessStrategy> for String {
    fn from(s: HarnessStrategy) -> String {
        s.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentSpec {
    pub corpus_seed: u64,
    pub n_docs: usize,
    /// Size of the separate training corpus for trained strategies.
    pub train_docs: usize,
    pub profile: SynthProfile,
    pub perturbation_plan: Vec<PerturbationStep>,
    pub strategies: Vec<HarnessStrategy>,
    pub alpha: f64,
    pub batch_size: usize,
    pub metric: MetricConfig,
    pub train: CorpusTrainConfig,
    pub random_seed: u64,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            corpus_seed: 11,
            n_docs: 600,
            train_docs: 600,
            profile: SynthProfile::compact(),
            perturbation_plan: Vec::new(),
            strategies: Vec::new(),
            alpha: 0.05,
            batch_size: DEFAULT_BATCH_SIZE,
            metric: MetricConfig::default(),
            train: CorpusTrainConfig::default(),
            random_seed: 7,
        }
    }
}

impl ExperimentSpec {
    /// Every single parser plus oracle, trained, random and BLEU-max rows.
    pub fn all_strategies(parsers: &ParserSet) -> Vec<HarnessStrategy> {
        let mut v: Vec<HarnessStrategy> = parsers.ids().map(|id| HarnessStrategy::Single(id.to_owned())).collect();
        v.extend([
            HarnessStrategy::Oracle,
            HarnessStrategy::Trained,
            HarnessStrategy::TrainedFt,
            HarnessStrategy::Random,
            HarnessStrategy::BleuMax,
        ]);
        v
    }

    pub fn unperturbed(seed: u64) -> Self {
        ExperimentSpec { corpus_seed: seed, ..Default::default() }
    }

    /// A share of text layers replaced by garbled text.
    pub fn text_layer(seed: u64, fraction: f64) -> Self {
        ExperimentSpec {
            corpus_seed: seed,
            perturbation_plan: vec![PerturbationStep {
                spec: PerturbationSpec::new(PerturbationMode::CharScramble, 0.8, seed),
                subset_fraction: fraction,
                target: RegimeTarget::TextLayer,
            }],
            ..Default::default()
        }
    }

    /// A share of rendered pages degraded for image-reading parsers.
    pub fn image(seed: u64, fraction: f64) -> Self {
        ExperimentSpec {
            corpus_seed: seed,
            perturbation_plan: vec![PerturbationStep {
                spec: PerturbationSpec::new(PerturbationMode::CharSubstitution, 0.1, seed),
                subset_fraction: fraction,
                target: RegimeTarget::Image,
            }],
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if self.n_docs == 0 || self.batch_size == 0 {
            return Err(Error::Config("n_docs and batch_size must be positive".into()));
        }
        for step in &self.perturbation_plan {
            step.spec.validate()?;
            if !(0.0..=1.0).contains(&step.subset_fraction) {
                return Err(Error::Config(format!("subset fraction {} outside [0,1]", step.subset_fraction)));
            }
        }
        Ok(())
    }

    fn needs_training(&self) -> bool {
        self.strategies
            .iter()
            .any(|s| matches!(s, HarnessStrategy::Trained | HarnessStrategy::TrainedFt))
    }
}

/// The `⌊fraction·n⌋` documents with the smallest salted hash of their id.
fn chosen_subset(docs: &[DocumentRecord], fraction: f64, seed: u64) -> Vec<usize> {
    let mut order: Vec<(u64, usize)> =
        docs.iter().enumerate().map(|(i, d)| (mix(fnv1a64(d.doc_id.as_bytes()), seed), i)).collect();
    order.sort_unstable();
    let take = (fraction * docs.len() as f64 + 1e-9).floor() as usize;
    let mut idx: Vec<usize> = order.into_iter().take(take).map(|(_, i)| i).collect();
    idx.sort_unstable();
    idx
}

/// Applies the text-layer steps to `docs` and returns a parser set carrying
/// the image steps.
pub fn apply_plan(docs: &mut [DocumentRecord], parsers: &ParserSet, plan: &[PerturbationStep]) -> Result<ParserSet> {
    let mut out = parsers.clone();
    for (i, step) in plan.iter().enumerate() {
        step.spec.validate()?;
        match step.target {
            RegimeTarget::TextLayer => {
                for idx in chosen_subset(docs, step.subset_fraction, step.spec.seed ^ i as u64) {
                    let doc = &mut docs[idx];
                    let spec = PerturbationSpec { seed: mix(step.spec.seed, fnv1a64(doc.doc_id.as_bytes())), ..step.spec };
                    doc.pages = perturb_pages(&doc.pages, &spec);
                }
            }
            RegimeTarget::Image => {
                let subset = DocSubset { fraction: step.subset_fraction, seed: step.spec.seed ^ i as u64 };
                for p in parsers.parsers() {
                    if let Engine::Mock(model) = &p.engine {
                        if model.source == MockSource::Groundtruth {
                            let mut p = p.clone();
                            if let Engine::Mock(m) = &mut p.engine {
                                m.errors.push(ErrorLayer { spec: step.spec, difficulty: Default::default(), subset: Some(subset) });
                            }
                            out.upsert(p)?;
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Quality of every parser on every document, computed in parallel.
pub fn score_cube(docs: &[Arc<DocumentRecord>], parsers: &ParserSet, metric: &MetricConfig) -> Result<Vec<Vec<QualityScores>>> {
    if let Some(d) = docs.iter().find(|d| d.groundtruth.is_none()) {
        return Err(Error::Precondition(format!("{} has no groundtruth", d.doc_id)));
    }
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    let chunk = docs.len().div_ceil(threads).max(1);
    std::thread::scope(|s| {
        let handles: Vec<_> = docs
            .chunks(chunk)
            .map(|part| {
                s.spawn(move || {
                    part.iter()
                        .map(|doc| {
                            let gt = doc.groundtruth.as_deref().unwrap_or_default();
                            parsers
                                .parsers()
                                .iter()
                                .map(|p| QualityScores::compute(&parse(p, doc).text, gt, doc.page_count(), metric))
                                .collect::<Result<Vec<_>>>()
                        })
                        .collect::<Result<Vec<_>>>()
                })
            })
            .collect();
        let mut out = Vec::with_capacity(docs.len());
        for h in handles {
            out.extend(h.join().expect("scoring thread panicked")?);
        }
        Ok(out)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub strategy: String,
    pub coverage: f64,
    pub bleu: f64,
    pub rouge: f64,
    pub car: f64,
    pub accepted_tokens: f64,
    /// Share of documents sent to the heavy parser, for routed rows.
    pub heavy_fraction: Option<f64>,
}

#[derive(Debug, Clone, Copy)]
struct DocScore {
    coverage: f64,
    bleu: f64,
    rouge: f64,
    car: f64,
}

impl From<&QualityScores> for DocScore {
    fn from(q: &QualityScores) -> Self {
        DocScore { coverage: q.coverage, bleu: q.bleu, rouge: q.rouge, car: q.car }
    }
}

impl DocScore {
    fn from_record(r: &ManifestRecord) -> Result<Self> {
        match (r.coverage, r.bleu, r.rouge, r.car) {
            (Some(coverage), Some(bleu), Some(rouge), Some(car)) => Ok(DocScore { coverage, bleu, rouge, car }),
            _ => Err(Error::Precondition(format!("manifest record for {} has no scores", r.doc_id))),
        }
    }
}

fn make_row(strategy: String, scores: &[DocScore], tokens: &[u64], tau: f64, heavy_fraction: Option<f64>) -> Result<ComparisonRow> {
    let n = scores.len() as f64;
    let mean = |f: fn(&DocScore) -> f64| scores.iter().map(f).sum::<f64>() / n;
    let per_doc: Vec<(u64, f64)> = tokens.iter().copied().zip(scores.iter().map(|s| s.bleu)).collect();
    Ok(ComparisonRow {
        strategy,
        coverage: mean(|s| s.coverage),
        bleu: mean(|s| s.bleu),
        rouge: mean(|s| s.rouge),
        car: mean(|s| s.car),
        accepted_tokens: accepted_tokens(&per_doc, tau)?,
        heavy_fraction,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub n_docs: usize,
    pub alpha: f64,
    pub rows: Vec<ComparisonRow>,
}

impl RegimeReport {
    pub fn row(&self, strategy: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.strategy == strategy)
    }

    pub fn bleu(&self, strategy: &str) -> Result<f64> {
        self.row(strategy)
            .map(|r| r.bleu)
            .ok_or_else(|| Error::Precondition(format!("no row for `{strategy}`")))
    }

    pub fn to_table(&self) -> String {
        let mut s = format!(
            "{:<22} {:>8} {:>6} {:>6} {:>6} {:>6} {:>7}\n",
            "strategy", "coverage", "bleu", "rouge", "car", "at", "heavy%"
        );
        for r in &self.rows {
            let heavy = r.heavy_fraction.map_or("--".to_owned(), |h| format!("{:.1}", 100.0 * h));
            s.push_str(&format!(
                "{:<22} {:>8.1} {:>6.1} {:>6.1} {:>6.1} {:>6.1} {:>7}\n",
                r.strategy,
                100.0 * r.coverage,
                100.0 * r.bleu,
                100.0 * r.rouge,
                100.0 * r.car,
                100.0 * r.accepted_tokens,
                heavy
            ));
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Generates the regime's evaluation corpus and parser set.
pub fn regime_inputs(spec: &ExperimentSpec, parsers: &ParserSet) -> Result<(Vec<Arc<DocumentRecord>>, ParserSet)> {
    corpus_for(spec, parsers, spec.n_docs, spec.corpus_seed)
}

fn corpus_for(spec: &ExperimentSpec, parsers: &ParserSet, n: usize, seed: u64) -> Result<(Vec<Arc<DocumentRecord>>, ParserSet)> {
    let mut docs = synth_corpus(n, &spec.profile, seed)?;
    let set = apply_plan(&mut docs, parsers, &spec.perturbation_plan)?;
    Ok((docs.into_iter().map(Arc::new).collect(), set))
}

/// Trains on a separate corpus drawn under the same regime.
pub fn train_for_regime(spec: &ExperimentSpec, parsers: &ParserSet) -> Result<CorpusModels> {
    let seed = mix(spec.corpus_seed, 0x7a1);
    let (docs, set) = corpus_for(spec, parsers, spec.train_docs, seed)?;
    train_from_corpus(&docs, &set, &spec.metric, &spec.train)
}

/// Runs every strategy of `spec` on one corpus and returns one row each.
/// Routed rows go through the campaign executor under the α cap.
pub fn run_regime(spec: &ExperimentSpec, parsers: &ParserSet) -> Result<RegimeReport> {
    run_regime_with(spec, parsers, None)
}

/// [`run_regime`] with pre-trained models instead of training on the fly.
pub fn run_regime_with(spec: &ExperimentSpec, parsers: &ParserSet, models: Option<&CorpusModels>) -> Result<RegimeReport> {
    spec.validate()?;
    let (docs, set) = regime_inputs(spec, parsers)?;
    let cube = score_cube(&docs, &set, &spec.metric)?;
    let tokens: Vec<u64> = docs.iter().map(|d| d.token_count).collect();
    let tau = spec.metric.at_threshold;
    let trained;
    let models = match models {
        Some(m) => Some(m),
        None if spec.needs_training() => {
            trained = train_for_regime(spec, parsers)?;
            Some(&trained)
        }
        None => None,
    };
    let campaign_row = |name: String, strategy: Strategy, predictor: Option<Arc<dyn AccuracyPredictor>>, models: Option<&CorpusModels>| -> Result<ComparisonRow> {
        let opts = CampaignOptions {
            strategy,
            alpha: spec.alpha,
            batch_size: spec.batch_size,
            metric: spec.metric.clone(),
            ..Default::default()
        };
        let mut c = Campaign::new(&set, opts);
        if let Some(p) = predictor {
            c = c.with_predictor(p);
        }
        if let Some(m) = models {
            c = c.with_cls2(m.cls2.clone());
        }
        let out = c.run(&docs)?;
        let scores = out.records.iter().map(DocScore::from_record).collect::<Result<Vec<_>>>()?;
        make_row(name, &scores, &tokens, tau, Some(out.report.heavy_fraction))
    };
    let mut rows = Vec::new();
    for strategy in &spec.strategies {
        let name = strategy.to_string();
        let row = match strategy {
            HarnessStrategy::Single(id) => {
                let j = set.index_of(id)?;
                let scores: Vec<DocScore> = cube.iter().map(|r| DocScore::from(&r[j])).collect();
                make_row(name, &scores, &tokens, tau, None)?
            }
            HarnessStrategy::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(spec.random_seed);
                let scores: Vec<DocScore> = cube.iter().map(|r| DocScore::from(&r[rng.gen_range(0..r.len())])).collect();
                make_row(name, &scores, &tokens, tau, None)?
            }
            HarnessStrategy::BleuMax => {
                let scores: Vec<DocScore> = cube
                    .iter()
                    .map(|r| {
                        let best = r.iter().max_by(|a, b| a.bleu.total_cmp(&b.bleu)).expect("parser set is non-empty");
                        DocScore::from(best)
                    })
                    .collect();
                make_row(name, &scores, &tokens, tau, None)?
            }
            HarnessStrategy::Oracle => {
                let mut oracle = OraclePredictor::new(set.len());
                for (doc, r) in docs.iter().zip(&cube) {
                    oracle.insert(doc.doc_id.clone(), r.iter().map(|q| q.bleu).collect())?;
                }
                campaign_row(name, Strategy::AdaparseLlm, Some(Arc::new(oracle)), None)?
            }
            HarnessStrategy::Trained => {
                let m = models.expect("trained models present");
                campaign_row(name, Strategy::AdaparseLlm, Some(Arc::new(m.predictor().clone())), None)?
            }
            HarnessStrategy::TrainedFt => campaign_row(name, Strategy::AdaparseFt, None, models)?,
        };
        rows.push(row);
    }
    Ok(RegimeReport { n_docs: docs.len(), alpha: spec.alpha, rows })
}

/// Mean CAR of one parser over `docs` with the text-layer perturbation of
/// `mode` applied to every document at each rate.
pub fn car_sweep(
    docs: &[DocumentRecord],
    parsers: &ParserSet,
    parser_id: &str,
    mode: PerturbationMode,
    rates: &[f64],
    metric: &MetricConfig,
) -> Result<Vec<(f64, f64)>> {
    let profile = parsers.get(parser_id)?;
    let mut out = Vec::with_capacity(rates.len());
    for &rate in rates {
        let mut total = 0.0;
        let mut scored = 0usize;
        for doc in docs {
            let Some(gt) = doc.groundtruth.as_deref() else { continue };
            let spec = PerturbationSpec::new(mode, rate, fnv1a64(doc.doc_id.as_bytes()));
            let degraded = DocumentRecord { pages: perturb_pages(&doc.pages, &spec), ..doc.clone() };
            total += crate::metrics::car(&parse(profile, &degraded).text, gt, metric);
            scored += 1;
        }
        if scored == 0 {
            return Err(Error::NoDocuments("no documents with groundtruth".into()));
        }
        out.push((rate, total / scored as f64));
    }
    Ok(out)
}

/// Token counts keyed by document id, for manifest-based summaries.
pub fn token_counts(docs: &[Arc<DocumentRecord>]) -> HashMap<String, u64> {
    docs.iter().map(|d| (d.doc_id.clone(), d.token_count)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parsers::reference_parsers;

    #[test]
    fn strategy_names_round_trip() {
        for s in ["oracle", "adaparse_llm", "adaparse_ft", "random", "bleu_max", "single:vit"] {
            assert_eq!(s.parse::<HarnessStrategy>().unwrap().to_string(), s);
        }
        assert!("single:".parse::<HarnessStrategy>().is_err());
    }

    #[test]
    fn subset_is_exact_and_stable() {
        let docs = synth_corpus(40, &SynthProfile::compact(), 1).unwrap();
        let a = chosen_subset(&docs, 0.15, 3);
        assert_eq!(a.len(), 6);
        assert_eq!(a, chosen_subset(&docs, 0.15, 3));
    }

    #[test]
    fn text_layer_plan_touches_only_subset() {
        let parsers = reference_parsers();
        let clean = synth_corpus(40, &SynthProfile::compact(), 2).unwrap();
        let mut docs = clean.clone();
        let spec = ExperimentSpec::text_layer(2, 0.25);
        apply_plan(&mut docs, &parsers, &spec.perturbation_plan).unwrap();
        let changed = docs.iter().zip(&clean).filter(|(a, b)| a.pages != b.pages).count();
        assert_eq!(changed, 10);
    }

    #[test]
    fn zero_alpha_matches_cheap_row() {
        let parsers = reference_parsers();
        let spec = ExperimentSpec {
            n_docs: 60,
            alpha: 0.0,
            batch_size: 16,
            strategies: vec![HarnessStrategy::Single("extract".into()), HarnessStrategy::Oracle],
            ..ExperimentSpec::unperturbed(4)
        };
        let rep = run_regime(&spec, &parsers).unwrap();
        let (a, b) = (&rep.rows[0], &rep.rows[1]);
        assert_eq!((a.bleu, a.rouge, a.car, a.coverage, a.accepted_tokens), (b.bleu, b.rouge, b.car, b.coverage, b.accepted_tokens));
        assert_eq!(b.heavy_fraction, Some(0.0));
    }

    #[test]
    fn car_falls_with_rate() {
        let parsers = reference_parsers();
        let docs = synth_corpus(20, &SynthProfile::compact(), 5).unwrap();
        let sweep = car_sweep(&docs, &parsers, "extract", PerturbationMode::CharSubstitution, &[0.0, 0.1, 0.3], &MetricConfig::default()).unwrap();
        assert!(sweep[0].1 > sweep[1].1 && sweep[1].1 > sweep[2].1, "{sweep:?}");
    }
}
