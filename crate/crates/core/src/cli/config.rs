use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_yaml::{Mapping, Value};

use crate::corpus::SynthProfile;
use crate::metrics::MetricConfig;
use crate::parsers::{reference_parsers, ParserSet};
use crate::scheduler::{CampaignOptions, Strategy, DEFAULT_BATCH_SIZE};
use crate::selector::{check_alpha, ValidityThresholds};
use crate::training::CorpusTrainConfig;
use crate::{Error, Result};

const TOP_KEYS: &[&str] = &[
    "pdf_dir",
    "out_dir",
    "parser_settings",
    "strategy",
    "alpha",
    "batch_size",
    "workers",
    "metric",
    "seed",
    "budget_seconds",
    "keep_text",
    "train",
    "synth",
];
const PARSER_KEYS: &[&str] = &["name", "weights_path", "cls2_path", "parser_set", "thresholds"];

/// Environment variables that override path settings.
pub const ENV_OVERRIDES: &[(&str, &str)] = &[
    ("ADAPARSE_PDF_DIR", "pdf_dir"),
    ("ADAPARSE_OUT_DIR", "out_dir"),
    ("ADAPARSE_WEIGHTS", "parser_settings.weights_path"),
    ("ADAPARSE_CLS2", "parser_settings.cls2_path"),
    ("ADAPARSE_PARSER_SET", "parser_settings.parser_set"),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParserSettings {
    /// A parser id, or `adaparse` / `adaparse_llm` / `adaparse_ft`.
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cls2_path: Option<PathBuf>,
    /// YAML or JSON parser set; the built-in reference set otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parser_set: Option<PathBuf>,
    #[serde(default)]
    pub thresholds: ValidityThresholds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WorkerCounts {
    All(usize),
    /// Per parser id; the `default` key covers unlisted pools.
    PerPool(BTreeMap<String, usize>),
}

impl Default for WorkerCounts {
    fn default() -> Self {
        WorkerCounts::All(1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub pdf_dir: PathBuf,
    pub out_dir: PathBuf,
    pub parser_settings: ParserSettings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<Strategy>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default)]
    pub workers: WorkerCounts,
    #[serde(default)]
    pub metric: MetricConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget_seconds: Option<f64>,
    /// Write parsed text next to the manifest.
    #[serde(default = "default_true")]
    pub keep_text: bool,
    #[serde(default)]
    pub train: CorpusTrainConfig,
    #[serde(default = "SynthProfile::compact")]
    pub synth: SynthProfile,
}

fn default_alpha() -> f64 {
    0.05
}

fn default_batch_size() -> usize {
    DEFAULT_BATCH_SIZE
}

fn default_true() -> bool {
    true
}

impl CampaignConfig {
    /// A config with defaults for everything but the three required keys.
    pub fn new(pdf_dir: impl Into<PathBuf>, out_dir: impl Into<PathBuf>, parser: &str) -> Self {
        let yaml = format!("pdf_dir: x\nout_dir: y\nparser_settings:\n  name: {parser}\n");
        let mut cfg: CampaignConfig = serde_yaml::from_str(&yaml).expect("static config parses");
        cfg.pdf_dir = pdf_dir.into();
        cfg.out_dir = out_dir.into();
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        self.metric.validate()?;
        self.train.train.validate()?;
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if self.parser_settings.name.trim().is_empty() {
            return Err(Error::Config("parser_settings.name is empty".into()));
        }
        let counts: Vec<usize> = match &self.workers {
            WorkerCounts::All(n) => vec![*n],
            WorkerCounts::PerPool(m) => m.values().copied().collect(),
        };
        if counts.contains(&0) {
            return Err(Error::Config("worker counts must be at least 1".into()));
        }
        Ok(())
    }

    /// Checks that the input directory exists and the output directory can be created.
    pub fn check_dirs(&self) -> Result<()> {
        if !self.pdf_dir.is_dir() {
            return Err(Error::Config(format!("pdf_dir {} does not exist", self.pdf_dir.display())));
        }
        std::fs::create_dir_all(&self.out_dir)
            .map_err(|e| Error::from(e).context(format!("creating out_dir {}", self.out_dir.display())))
    }

    /// The explicit `strategy`, else one derived from `parser_settings.name`.
    pub fn strategy(&self) -> Strategy {
        if let Some(s) = &self.strategy {
            return s.clone();
        }
        match self.parser_settings.name.as_str() {
            "adaparse" | "adaparse_llm" => Strategy::AdaparseLlm,
            "adaparse_ft" => Strategy::AdaparseFt,
            id => Strategy::Single(id.to_owned()),
        }
    }

    pub fn parser_set(&self) -> Result<ParserSet> {
        let Some(path) = &self.parser_settings.parser_set else {
            return Ok(reference_parsers());
        };
        let text = std::fs::read_to_string(path).map_err(|e| Error::from(e).context(path.display().to_string()))?;
        let set: ParserSet = serde_yaml::from_str(&text).map_err(|e| Error::from(e).context(path.display().to_string()))?;
        set.validate()?;
        Ok(set)
    }

    pub fn campaign_options(&self) -> CampaignOptions {
        let (workers, worker_overrides) = match &self.workers {
            WorkerCounts::All(n) => (*n, BTreeMap::new()),
            WorkerCounts::PerPool(m) => {
                let mut m = m.clone();
                (m.remove("default").unwrap_or(1), m)
            }
        };
        CampaignOptions {
            strategy: self.strategy(),
            alpha: self.alpha,
            batch_size: self.batch_size,
            workers,
            worker_overrides,
            metric: self.metric.clone(),
            thresholds: self.parser_settings.thresholds,
            spin_scale: 0.0,
            budget_seconds: self.budget_seconds,
        }
    }

    pub fn staged_dir(&self) -> PathBuf {
        self.out_dir.join("staged")
    }

    pub fn model_dir(&self) -> PathBuf {
        self.out_dir.join("model")
    }

    pub fn weights_path(&self) -> PathBuf {
        self.parser_settings.weights_path.clone().unwrap_or_else(|| self.model_dir().join("predictor.json"))
    }

    pub fn cls2_path(&self) -> PathBuf {
        self.parser_settings.cls2_path.clone().unwrap_or_else(|| self.model_dir().join("cls2.json"))
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.out_dir.join("manifest.jsonl")
    }

    pub fn to_yaml(&self) -> Result<String> {
        Ok(serde_yaml::to_string(self)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_yaml()?)?;
        Ok(())
    }
}

fn set_path(root: &mut Mapping, dotted: &str, value: String) {
    let mut parts = dotted.split('.').peekable();
    let mut node = root;
    while let Some(key) = parts.next() {
        let k = Value::String(key.to_owned());
        if parts.peek().is_none() {
            node.insert(k, Value::String(value));
            return;
        }
        let child = node.entry(k).or_insert_with(|| Value::Mapping(Mapping::new()));
        if !child.is_mapping() {
            *child = Value::Mapping(Mapping::new());
        }
        node = child.as_mapping_mut().expect("just made a mapping");
    }
}

fn unknown_keys(map: &Mapping, known: &[&str], prefix: &str) -> Vec<String> {
    map.keys()
        .filter_map(|k| {
            let name = k.as_str().map_or_else(|| format!("{k:?}"), str::to_owned);
            (!known.contains(&name.as_str())).then(|| format!("{prefix}{name}"))
        })
        .collect()
}

/// Parses a config document, applying `env` overrides first. Returns the
/// config and one warning per unknown key.
pub fn parse_config<F>(text: &str, env: F) -> Result<(CampaignConfig, Vec<String>)>
where
    F: Fn(&str) -> Option<String>,
{
    let mut root = match serde_yaml::from_str::<Value>(text)? {
        Value::Mapping(m) => m,
        Value::Null => Mapping::new(),
        _ => return Err(Error::Config("config must be a YAML mapping".into())),
    };
    for (var, key) in ENV_OVERRIDES {
        if let Some(v) = env(var) {
            set_path(&mut root, key, v);
        }
    }
    let mut warnings: Vec<String> = unknown_keys(&root, TOP_KEYS, "")
        .into_iter()
        .map(|k| format!("unknown config key `{k}` ignored"))
        .collect();
    for key in ["pdf_dir", "out_dir", "parser_settings"] {
        if !root.contains_key(key) {
            return Err(Error::MissingKey(key.into()));
        }
    }
    match root.get("parser_settings") {
        Some(Value::Mapping(ps)) => {
            if !ps.contains_key("name") {
                return Err(Error::MissingKey("parser_settings.name".into()));
            }
            warnings.extend(
                unknown_keys(ps, PARSER_KEYS, "parser_settings.")
                    .into_iter()
                    .map(|k| format!("unknown config key `{k}` ignored")),
            );
        }
        _ => return Err(Error::MissingKey("parser_settings.name".into())),
    }
    let cfg: CampaignConfig = serde_yaml::from_value(Value::Mapping(root))?;
    cfg.validate()?;
    Ok((cfg, warnings))
}

/// Reads a YAML config, applying `ADAPARSE_*` environment overrides. Unknown
/// keys are logged and ignored; the effective config is logged at debug level.
pub fn load_config(path: &Path) -> Result<CampaignConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::from(e).context(path.display().to_string()))?;
    let (cfg, warnings) =
        parse_config(&text, |k| std::env::var(k).ok()).map_err(|e| e.context(path.display().to_string()))?;
    for w in &warnings {
        log::warn!("{}: {w}", path.display());
    }
    log::debug!("effective config:\n{}", cfg.to_yaml()?);
    Ok(cfg)
}
