//! Dataset ingestion, split generation, and experiment orchestration: the
//! reproducibility surface for training, retrieval comparisons, sweeps, and
//! ablations.
//!
//! Outputs land in a run directory: `report.json`, `report.csv`, raw
//! completions per repeat, and a `manifest.json` echoing the configuration.
//! All files are written atomically (temp file plus rename) and contain no
//! timestamps, so identical seeds and configs produce byte-identical runs.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoder::{self, EmbeddingVector, EncoderConfig, EncoderError};
use crate::fingerprint::{fnv1a, morgan_fingerprint, FingerprintError};
use crate::metrics::{self, MetricsError, RougeVariant, ScoreReport};
use crate::molgraph::parse_smiles;
use crate::numerics::{load_checkpoint, save_checkpoint, NumericsError, ParamStore};
use crate::promptllm::{
    build_prompt, complete, parse_label, Backend, Demonstration, HttpBackend, PromptError, Task,
};
use crate::retrieval::{
    build_pool, select_mmr, select_topk, DemonstrationPool, MmrConfig, Payload, PoolQuery,
    RetrievalError, Strategy,
};
use crate::sampler::SamplerConfig;
use crate::textemb::{load_embedding_file, TextEmbError};
use crate::trainer::{self, loss_curve_csv, TrainConfig, TrainItem, TrainerError};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("format error: {0}")]
    Format(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
    #[error(transparent)]
    Encoder(#[from] EncoderError),
    #[error(transparent)]
    Trainer(#[from] TrainerError),
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    TextEmb(#[from] TextEmbError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Fingerprint(#[from] FingerprintError),
}

impl From<std::io::Error> for ExperimentError {
    fn from(e: std::io::Error) -> Self {
        ExperimentError::Io(e.to_string())
    }
}

/// Split membership carried by datasets with a predefined split column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitTag {
    Train,
    Valid,
    Test,
}

/// One validated dataset row.
#[derive(Debug, Clone)]
pub struct DatasetRecord {
    pub id: String,
    pub smiles: String,
    pub payload: Payload,
    pub split: Option<SplitTag>,
}

/// What ingestion kept and what it dropped.
#[derive(Debug, Clone, Serialize)]
pub struct IngestSummary {
    pub loaded: usize,
    pub skipped: Vec<(String, String)>,
}

/// Retrieval strategies at the experiment level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyKind {
    Random,
    Scaffold,
    Gae,
    Gamic,
}

impl std::fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(match self {
            StrategyKind::Random => "random",
            StrategyKind::Scaffold => "scaffold",
            StrategyKind::Gae => "gae",
            StrategyKind::Gamic => "gamic",
        })
    }
}

/// Completion backend selection in config files.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BackendConfig {
    #[default]
    Mock,
    Http {
        url: String,
        model: String,
        #[serde(default)]
        api_key_env: Option<String>,
        #[serde(default)]
        temperature: f64,
        #[serde(default = "default_max_tokens")]
        max_tokens: u32,
        #[serde(default = "default_retries")]
        max_retries: usize,
    },
}

fn default_max_tokens() -> u32 {
    512
}

fn default_retries() -> usize {
    3
}

impl BackendConfig {
    fn to_backend(&self) -> Result<Backend, ExperimentError> {
        match self {
            BackendConfig::Mock => Ok(Backend::Mock),
            BackendConfig::Http {
                url,
                model,
                api_key_env,
                temperature,
                max_tokens,
                max_retries,
            } => {
                let api_key = match api_key_env {
                    Some(var) => Some(std::env::var(var).map_err(|_| {
                        ExperimentError::Config(format!(
                            "environment variable '{var}' for the API key is not set"
                        ))
                    })?),
                    None => None,
                };
                let mut http = HttpBackend::new(url.clone(), model.clone());
                http.api_key = api_key;
                http.temperature = *temperature;
                http.max_tokens = *max_tokens;
                http.max_retries = *max_retries;
                Ok(Backend::Http(http))
            }
        }
    }
}

/// Training hyperparameters as they appear in config files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainSection {
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_true")]
    pub morgan_sampling: bool,
    #[serde(default = "default_max_positives")]
    pub max_positives: usize,
    #[serde(default = "default_tau_pos")]
    pub tau_pos: f64,
    #[serde(default = "default_tau_neg")]
    pub tau_neg: f64,
    #[serde(default = "default_negatives")]
    pub negatives: usize,
}

fn default_epochs() -> usize {
    50
}
fn default_batch_size() -> usize {
    64
}
fn default_lr() -> f64 {
    1e-3
}
fn default_temperature() -> f64 {
    0.1
}
fn default_true() -> bool {
    true
}
fn default_max_positives() -> usize {
    2
}
fn default_tau_pos() -> f64 {
    0.7
}
fn default_tau_neg() -> f64 {
    0.3
}
fn default_negatives() -> usize {
    8
}

impl Default for TrainSection {
    fn default() -> Self {
        serde_json::from_str("{}").unwrap()
    }
}

impl TrainSection {
    fn to_train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            temperature: self.temperature,
            epochs: self.epochs,
            batch_size: self.batch_size,
            lr: self.lr,
            sampler: SamplerConfig {
                max_positives: self.max_positives,
                tau_pos: self.tau_pos,
                tau_neg: self.tau_neg,
                negatives: self.negatives,
            },
            seed,
            morgan_sampling: self.morgan_sampling,
        }
    }
}

/// One experiment: dataset, strategy, prompt shape, backend, and outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub task: Task,
    pub dataset: PathBuf,
    /// Caption embedding file (scibert provenance) for training.
    #[serde(default)]
    pub embeddings: Option<PathBuf>,
    /// Alternative-provenance embedding file (bert) for ablations.
    #[serde(default)]
    pub embeddings_bert: Option<PathBuf>,
    /// Trained encoder checkpoint for the gae/gamic strategies.
    #[serde(default)]
    pub checkpoint: Option<PathBuf>,
    pub strategy: StrategyKind,
    #[serde(default = "default_true")]
    pub mmr: bool,
    /// Demonstrations per prompt; defaults to 2 for captioning, 3 otherwise.
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_split_seeds")]
    pub split_seeds: Vec<u64>,
    /// Which of the three split seeds is active for this run.
    #[serde(default)]
    pub split_index: usize,
    #[serde(default)]
    pub backend: BackendConfig,
    pub out_dir: PathBuf,
    /// Also dump per-example scores as CSV, one file per repeat.
    #[serde(default)]
    pub dump_per_example: bool,
    #[serde(default = "default_fp_radius")]
    pub fp_radius: usize,
    #[serde(default = "default_fp_nbits")]
    pub fp_nbits: usize,
    #[serde(default)]
    pub encoder: Option<EncoderConfig>,
    #[serde(default)]
    pub train: TrainSection,
}

fn default_lambda() -> f64 {
    0.3
}
fn default_repeats() -> usize {
    5
}
fn default_seed() -> u64 {
    20240811
}
fn default_split_seeds() -> Vec<u64> {
    vec![11, 23, 47]
}
fn default_fp_radius() -> usize {
    2
}
fn default_fp_nbits() -> usize {
    2048
}

impl ExperimentConfig {
    pub fn effective_k(&self) -> usize {
        self.k.unwrap_or(match self.task {
            Task::Caption => 2,
            Task::Property | Task::Yield => 3,
        })
    }
}

/// Replace `${NAME}` with the environment variable `NAME`; used for secrets
/// in config files.
pub fn interpolate_env(text: &str) -> Result<String, ExperimentError> {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(start) = rest.find("${") {
        out.push_str(&rest[..start]);
        let after = &rest[start + 2..];
        let end = after
            .find('}')
            .ok_or_else(|| ExperimentError::Format("unterminated ${...} in config".to_string()))?;
        let name = &after[..end];
        let value = std::env::var(name).map_err(|_| {
            ExperimentError::Config(format!("environment variable '{name}' is not set"))
        })?;
        out.push_str(&value);
        rest = &after[end + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

/// Load a config file (JSON with `${ENV}` interpolation).
pub fn load_config(path: &Path) -> Result<ExperimentConfig, ExperimentError> {
    let raw = fs::read_to_string(path)?;
    let interpolated = interpolate_env(&raw)?;
    serde_json::from_str(&interpolated).map_err(|e| ExperimentError::Format(e.to_string()))
}

fn parse_label_text(text: &str) -> Option<bool> {
    match text.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "high" => Some(true),
        "0" | "false" | "no" | "low" => Some(false),
        _ => None,
    }
}

fn parse_split_tag(text: &str) -> Option<SplitTag> {
    match text.trim().to_ascii_lowercase().as_str() {
        "train" => Some(SplitTag::Train),
        "valid" | "validation" | "val" => Some(SplitTag::Valid),
        "test" => Some(SplitTag::Test),
        _ => None,
    }
}

/// Read a dataset file: one JSON object per line, or delimiter-separated
/// with a header (comma or tab). Fields: optional `id`, `smiles`, and
/// `caption` or `label` matching the task; optional `split`. Records whose
/// SMILES fail to parse are skipped and reported in the summary.
pub fn ingest(
    path: &Path,
    task: Task,
) -> Result<(Vec<DatasetRecord>, IngestSummary), ExperimentError> {
    let raw = fs::read_to_string(path)?;
    let first_char = raw.trim_start().chars().next().ok_or_else(|| {
        ExperimentError::Format(format!("dataset file {} is empty", path.display()))
    })?;
    let rows: Vec<(Option<String>, String, String, Option<String>)> = if first_char == '{' {
        ingest_jsonl(&raw, task)?
    } else {
        ingest_delimited(&raw, task)?
    };

    let mut seen = BTreeSet::new();
    let mut records = Vec::with_capacity(rows.len());
    let mut skipped = Vec::new();
    for (i, (id, smiles, payload_text, split_text)) in rows.into_iter().enumerate() {
        let id = id.unwrap_or_else(|| i.to_string());
        if !seen.insert(id.clone()) {
            return Err(ExperimentError::Format(format!("duplicate id '{id}'")));
        }
        let payload = match task {
            Task::Caption => {
                Payload::Caption(payload_text.replace(['\n', '\r'], " ").trim().to_string())
            }
            Task::Property | Task::Yield => match parse_label_text(&payload_text) {
                Some(l) => Payload::Label(l),
                None => {
                    return Err(ExperimentError::Format(format!(
                        "record '{id}' has unparseable label '{payload_text}'"
                    )))
                }
            },
        };
        let split = match split_text {
            Some(text) => Some(parse_split_tag(&text).ok_or_else(|| {
                ExperimentError::Format(format!("record '{id}' has unknown split '{text}'"))
            })?),
            None => None,
        };
        match parse_smiles(&smiles) {
            Ok(_) => records.push(DatasetRecord {
                id,
                smiles,
                payload,
                split,
            }),
            Err(e) => skipped.push((id, e.to_string())),
        }
    }
    let summary = IngestSummary {
        loaded: records.len(),
        skipped,
    };
    Ok((records, summary))
}

type RawRow = (Option<String>, String, String, Option<String>);

fn ingest_jsonl(raw: &str, task: Task) -> Result<Vec<RawRow>, ExperimentError> {
    let payload_field = match task {
        Task::Caption => "caption",
        Task::Property | Task::Yield => "label",
    };
    let mut rows = Vec::new();
    for (lineno, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(line)
            .map_err(|e| ExperimentError::Format(format!("line {}: {e}", lineno + 1)))?;
        let smiles = value
            .get("smiles")
            .and_then(|v| v.as_str())
            .ok_or_else(|| {
                ExperimentError::Format(format!("line {}: missing 'smiles'", lineno + 1))
            })?
            .to_string();
        let payload = value
            .get(payload_field)
            .map(|v| match v {
                serde_json::Value::String(s) => s.clone(),
                other => other.to_string(),
            })
            .ok_or_else(|| {
                ExperimentError::Format(format!("line {}: missing '{payload_field}'", lineno + 1))
            })?;
        let id = value.get("id").map(|v| match v {
            serde_json::Value::String(s) => s.clone(),
            other => other.to_string(),
        });
        let split = value
            .get("split")
            .and_then(|v| v.as_str())
            .map(|s| s.to_string());
        rows.push((id, smiles, payload, split));
    }
    Ok(rows)
}

fn ingest_delimited(raw: &str, task: Task) -> Result<Vec<RawRow>, ExperimentError> {
    let payload_field = match task {
        Task::Caption => "caption",
        Task::Property | Task::Yield => "label",
    };
    let mut lines = raw.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| ExperimentError::Format("empty dataset file".into()))?;
    let delimiter = if header.contains('\t') { '\t' } else { ',' };
    let columns: Vec<String> = header
        .split(delimiter)
        .map(|c| c.trim().to_ascii_lowercase())
        .collect();
    let find = |name: &str| columns.iter().position(|c| c == name);
    let smiles_col = find("smiles")
        .ok_or_else(|| ExperimentError::Format("missing required column 'smiles'".into()))?;
    let payload_col = find(payload_field).ok_or_else(|| {
        ExperimentError::Format(format!("missing required column '{payload_field}'"))
    })?;
    let id_col = find("id");
    let split_col = find("split");

    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(delimiter).collect();
        if fields.len() <= smiles_col.max(payload_col) {
            return Err(ExperimentError::Format(format!(
                "row {}: expected at least {} fields",
                lineno + 2,
                smiles_col.max(payload_col) + 1
            )));
        }
        rows.push((
            id_col
                .and_then(|c| fields.get(c))
                .map(|s| s.trim().to_string()),
            fields[smiles_col].trim().to_string(),
            fields[payload_col].trim().to_string(),
            split_col
                .and_then(|c| fields.get(c))
                .map(|s| s.trim().to_string()),
        ));
    }
    Ok(rows)
}

/// Index sets of one train/valid/test partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitSets {
    pub train: Vec<usize>,
    pub valid: Vec<usize>,
    pub test: Vec<usize>,
}

/// Deterministic 8:1:1 partitions, one per seed. Sizes are `floor(0.8 n)`,
/// `floor(0.1 n)`, and the remainder.
pub fn make_splits(n_records: usize, seeds: &[u64]) -> Result<Vec<SplitSets>, ExperimentError> {
    if n_records < 10 {
        return Err(ExperimentError::Config(format!(
            "need at least 10 records to split, got {n_records}"
        )));
    }
    let mut out = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let mut indices: Vec<usize> = (0..n_records).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        indices.shuffle(&mut rng);
        let n_train = n_records * 8 / 10;
        let n_valid = n_records / 10;
        out.push(SplitSets {
            train: indices[..n_train].to_vec(),
            valid: indices[n_train..n_train + n_valid].to_vec(),
            test: indices[n_train + n_valid..].to_vec(),
        });
    }
    Ok(out)
}

fn resolve_split(
    records: &[DatasetRecord],
    cfg_seeds: &[u64],
    split_index: usize,
) -> Result<SplitSets, ExperimentError> {
    if records.iter().any(|r| r.split.is_some()) {
        let pick = |tag: SplitTag| {
            records
                .iter()
                .enumerate()
                .filter(|(_, r)| r.split == Some(tag))
                .map(|(i, _)| i)
                .collect::<Vec<usize>>()
        };
        let sets = SplitSets {
            train: pick(SplitTag::Train),
            valid: pick(SplitTag::Valid),
            test: pick(SplitTag::Test),
        };
        if sets.train.is_empty() || sets.test.is_empty() {
            return Err(ExperimentError::Config(
                "predefined split must contain train and test records".into(),
            ));
        }
        return Ok(sets);
    }
    let splits = make_splits(records.len(), cfg_seeds)?;
    splits
        .into_iter()
        .nth(split_index)
        .ok_or_else(|| ExperimentError::Config(format!("split_index {split_index} out of range")))
}

struct LoadedEncoder {
    params: ParamStore,
    cfg: EncoderConfig,
    kind: String,
}

#[derive(Serialize, Deserialize)]
struct CheckpointMeta {
    kind: String,
    encoder: EncoderConfig,
    provenance: String,
}

fn load_encoder_checkpoint(path: &Path) -> Result<LoadedEncoder, ExperimentError> {
    let (params, meta) = load_checkpoint(path)?;
    let meta: CheckpointMeta = serde_json::from_str(&meta)
        .map_err(|e| ExperimentError::Format(format!("bad checkpoint metadata: {e}")))?;
    Ok(LoadedEncoder {
        params,
        cfg: meta.encoder,
        kind: meta.kind,
    })
}

/// Train the projector (or the GAE baseline) on the configured caption
/// dataset and write `checkpoint.gckp` plus `loss_curve.csv` into `out_dir`.
pub fn train_encoder(cfg: &ExperimentConfig, gae: bool) -> Result<PathBuf, ExperimentError> {
    let (records, summary) = ingest(&cfg.dataset, Task::Caption)?;
    print_ingest_summary(&cfg.dataset, &summary);
    let split = resolve_split(&records, &cfg.split_seeds, cfg.split_index)?;

    let to_items = |indices: &[usize]| -> Vec<TrainItem> {
        indices
            .iter()
            .map(|&i| {
                let record = &records[i];
                let graph = parse_smiles(&record.smiles).expect("validated at ingest");
                let fingerprint = morgan_fingerprint(&graph, cfg.fp_radius, cfg.fp_nbits);
                TrainItem {
                    id: record.id.clone(),
                    graph,
                    fingerprint,
                }
            })
            .collect()
    };
    let train_items = to_items(&split.train);
    let valid_items = to_items(&split.valid);

    let (encoder_cfg, provenance, output) = if gae {
        let encoder_cfg = cfg.encoder.clone().unwrap_or_default();
        let train_cfg = cfg.train.to_train_config(cfg.seed);
        let output = trainer::train_gae(&train_items, &valid_items, &encoder_cfg, &train_cfg)?;
        (encoder_cfg, "none".to_string(), output)
    } else {
        let emb_path = cfg
            .embeddings
            .as_ref()
            .ok_or_else(|| ExperimentError::Config("training needs an 'embeddings' file".into()))?;
        let index = load_embedding_file(emb_path)?;
        let mut encoder_cfg = cfg.encoder.clone().unwrap_or_default();
        encoder_cfg.out_dim = index.dim();
        let train_cfg = cfg.train.to_train_config(cfg.seed);
        let output = trainer::train(&train_items, &valid_items, &index, &encoder_cfg, &train_cfg)?;
        (encoder_cfg, index.provenance().to_string(), output)
    };

    fs::create_dir_all(&cfg.out_dir)?;
    let meta = serde_json::to_string(&CheckpointMeta {
        kind: if gae { "gae" } else { "gamic" }.to_string(),
        encoder: encoder_cfg,
        provenance,
    })
    .unwrap();
    let ckpt_path = cfg.out_dir.join("checkpoint.gckp");
    save_checkpoint(&ckpt_path, &output.params, &meta)?;
    write_atomic(
        &cfg.out_dir.join("loss_curve.csv"),
        loss_curve_csv(&output.curve).as_bytes(),
    )?;
    println!(
        "trained {} epochs, best epoch {}, checkpoint {}",
        output.curve.len(),
        output.best_epoch,
        ckpt_path.display()
    );
    Ok(ckpt_path)
}

/// A prepared evaluation context: pool built, test items embedded.
pub struct Prepared {
    pub pool: DemonstrationPool,
    pub tests: Vec<PreparedTest>,
    pub skipped: Vec<(String, String)>,
}

pub struct PreparedTest {
    pub id: String,
    pub smiles: String,
    pub payload: Payload,
    pub query: PoolQuery,
}

/// Ingest the dataset, resolve splits, build the demonstration pool, and
/// precompute per-test-item query features.
pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared, ExperimentError> {
    if cfg.mmr && matches!(cfg.strategy, StrategyKind::Random | StrategyKind::Scaffold) {
        return Err(ExperimentError::Config(format!(
            "MMR needs an embedding strategy; '{}' has no embedding space",
            cfg.strategy
        )));
    }
    let (records, summary) = ingest(&cfg.dataset, cfg.task)?;
    print_ingest_summary(&cfg.dataset, &summary);
    let split = resolve_split(&records, &cfg.split_seeds, cfg.split_index)?;

    let needs_embeddings = matches!(cfg.strategy, StrategyKind::Gae | StrategyKind::Gamic);
    let loaded = if needs_embeddings {
        let path = cfg.checkpoint.as_ref().ok_or_else(|| {
            ExperimentError::Config(format!(
                "strategy '{}' needs a trained checkpoint",
                cfg.strategy
            ))
        })?;
        let loaded = load_encoder_checkpoint(path)?;
        let expected = match cfg.strategy {
            StrategyKind::Gae => "gae",
            _ => "gamic",
        };
        if loaded.kind != expected {
            return Err(ExperimentError::Config(format!(
                "checkpoint kind '{}' does not match strategy '{}'",
                loaded.kind, cfg.strategy
            )));
        }
        Some(loaded)
    } else {
        None
    };

    let embed = |graph: &crate::molgraph::MolecularGraph| -> Result<EmbeddingVector, String> {
        let enc = loaded
            .as_ref()
            .expect("embedding strategies load a checkpoint");
        let result = if enc.kind == "gae" {
            encoder::encode_gae(graph, &enc.params, &enc.cfg)
        } else {
            encoder::encode(graph, &enc.params, &enc.cfg)
        };
        result.map_err(|e| e.to_string())
    };

    let pool_records: Vec<(String, String, Payload)> = split
        .train
        .iter()
        .map(|&i| {
            (
                records[i].id.clone(),
                records[i].smiles.clone(),
                records[i].payload.clone(),
            )
        })
        .collect();
    let embedder: Option<&crate::retrieval::EmbedderFn> =
        if needs_embeddings { Some(&embed) } else { None };
    let (pool, mut skipped) = build_pool(&pool_records, cfg.fp_radius, cfg.fp_nbits, embedder);

    let mut tests = Vec::with_capacity(split.test.len());
    for &i in &split.test {
        let record = &records[i];
        let graph = match parse_smiles(&record.smiles) {
            Ok(g) => g,
            Err(e) => {
                skipped.push((record.id.clone(), e.to_string()));
                continue;
            }
        };
        let embedding = if needs_embeddings {
            match embed(&graph) {
                Ok(z) => Some(z),
                Err(e) => {
                    skipped.push((record.id.clone(), e));
                    continue;
                }
            }
        } else {
            None
        };
        tests.push(PreparedTest {
            id: record.id.clone(),
            smiles: record.smiles.clone(),
            payload: record.payload.clone(),
            query: PoolQuery {
                fingerprint: Some(morgan_fingerprint(&graph, cfg.fp_radius, cfg.fp_nbits)),
                embedding,
            },
        });
    }
    Ok(Prepared {
        pool,
        tests,
        skipped,
    })
}

/// Embed an ad hoc query molecule with the configured checkpoint, matching
/// how `prepare` embeds pool entries.
pub fn embed_query(
    cfg: &ExperimentConfig,
    graph: &crate::molgraph::MolecularGraph,
) -> Result<EmbeddingVector, ExperimentError> {
    let path = cfg.checkpoint.as_ref().ok_or_else(|| {
        ExperimentError::Config(format!(
            "strategy '{}' needs a trained checkpoint",
            cfg.strategy
        ))
    })?;
    let loaded = load_encoder_checkpoint(path)?;
    let z = if loaded.kind == "gae" {
        encoder::encode_gae(graph, &loaded.params, &loaded.cfg)?
    } else {
        encoder::encode(graph, &loaded.params, &loaded.cfg)?
    };
    Ok(z)
}

/// Build one prompt per test item with the configured retrieval settings,
/// e.g. for export to an offline LLM run.
pub fn build_test_prompts(
    cfg: &ExperimentConfig,
    prepared: &Prepared,
    k: usize,
) -> Result<Vec<(String, crate::promptllm::PromptBundle)>, ExperimentError> {
    let strategy = match cfg.strategy {
        StrategyKind::Random => Strategy::Random,
        StrategyKind::Scaffold => Strategy::Scaffold,
        StrategyKind::Gae | StrategyKind::Gamic => Strategy::Embedding,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ fnv1a(&[0x9b0]));
    let mut bundles = Vec::with_capacity(prepared.tests.len());
    for test in &prepared.tests {
        let picked = if k == 0 {
            Vec::new()
        } else if cfg.mmr {
            let z = test
                .query
                .embedding
                .as_ref()
                .ok_or_else(|| ExperimentError::Config("MMR needs query embeddings".into()))?;
            select_mmr(z, &prepared.pool, &MmrConfig::new(k, cfg.lambda))?
        } else {
            select_topk(&test.query, &prepared.pool, k, strategy, &mut rng)?
        };
        let demos: Vec<Demonstration> = picked
            .iter()
            .map(|&i| {
                let entry = prepared.pool.entry(i);
                let output = match &entry.payload {
                    Payload::Caption(c) => c.clone(),
                    Payload::Label(l) => cfg.task.render_label(*l).to_string(),
                };
                Demonstration {
                    input: entry.smiles.clone(),
                    output,
                }
            })
            .collect();
        bundles.push((
            test.id.clone(),
            build_prompt(cfg.task, &demos, &test.smiles),
        ));
    }
    Ok(bundles)
}

const CAPTION_METRICS: [&str; 6] = ["bleu2", "bleu4", "rouge1", "rouge2", "rougeL", "meteor"];

/// Per-repeat `(test id, completion)` rows.
pub type CompletionLog = Vec<Vec<(String, String)>>;

/// Per-example scores, ready to be dumped as CSV for inspection.
pub struct PerExampleScores {
    pub header: String,
    /// One CSV row per test item, per repeat.
    pub rows_per_repeat: Vec<Vec<String>>,
}

/// Run `repeats` evaluations over the prepared test set and aggregate.
/// Returns the report, the per-repeat completions, and per-example scores.
pub fn evaluate(
    cfg: &ExperimentConfig,
    prepared: &Prepared,
    k: usize,
    lambda: f64,
    mmr: bool,
) -> Result<(ScoreReport, CompletionLog, PerExampleScores), ExperimentError> {
    if k > prepared.pool.len() {
        return Err(ExperimentError::Config(format!(
            "k = {k} exceeds pool size {}",
            prepared.pool.len()
        )));
    }
    let backend = cfg.backend.to_backend()?;
    let strategy = match cfg.strategy {
        StrategyKind::Random => Strategy::Random,
        StrategyKind::Scaffold => Strategy::Scaffold,
        StrategyKind::Gae | StrategyKind::Gamic => Strategy::Embedding,
    };

    let mut per_repeat_rows: Vec<Vec<f64>> = Vec::with_capacity(cfg.repeats);
    let mut all_completions = Vec::with_capacity(cfg.repeats);
    let mut per_example_rows: Vec<Vec<String>> = Vec::with_capacity(cfg.repeats);
    for repeat in 0..cfg.repeats {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ fnv1a(&[repeat as u64, 0x4e9]));
        let mut caption_sums = vec![0.0f64; CAPTION_METRICS.len()];
        let mut predictions: Vec<Option<bool>> = Vec::new();
        let mut labels: Vec<bool> = Vec::new();
        let mut completions = Vec::with_capacity(prepared.tests.len());
        let mut example_rows = Vec::with_capacity(prepared.tests.len());

        for test in &prepared.tests {
            let picked = if k == 0 {
                Vec::new()
            } else if mmr {
                let z =
                    test.query.embedding.as_ref().ok_or_else(|| {
                        ExperimentError::Config("MMR needs query embeddings".into())
                    })?;
                let mmr_cfg = MmrConfig::new(k, lambda);
                select_mmr(z, &prepared.pool, &mmr_cfg)?
            } else {
                select_topk(&test.query, &prepared.pool, k, strategy, &mut rng)?
            };
            let demos: Vec<Demonstration> = picked
                .iter()
                .map(|&i| {
                    let entry = prepared.pool.entry(i);
                    let output = match &entry.payload {
                        Payload::Caption(c) => c.clone(),
                        Payload::Label(l) => cfg.task.render_label(*l).to_string(),
                    };
                    Demonstration {
                        input: entry.smiles.clone(),
                        output,
                    }
                })
                .collect();
            let bundle = build_prompt(cfg.task, &demos, &test.smiles);
            let completion = complete(&bundle, &backend)?;
            match (&cfg.task, &test.payload) {
                (Task::Caption, Payload::Caption(reference)) => {
                    let scores = [
                        metrics::bleu(&completion, reference, 2),
                        metrics::bleu(&completion, reference, 4),
                        metrics::rouge(&completion, reference, RougeVariant::Rouge1),
                        metrics::rouge(&completion, reference, RougeVariant::Rouge2),
                        metrics::rouge(&completion, reference, RougeVariant::RougeL),
                        metrics::meteor_lite(&completion, reference),
                    ];
                    for (sum, score) in caption_sums.iter_mut().zip(scores) {
                        *sum += score;
                    }
                    let rendered: Vec<String> = scores.iter().map(|s| format!("{s:.6}")).collect();
                    example_rows.push(format!("{},{}", test.id, rendered.join(",")));
                }
                (Task::Property | Task::Yield, Payload::Label(label)) => {
                    let prediction = parse_label(&completion, cfg.task);
                    let rendered = match prediction {
                        Some(true) => "1",
                        Some(false) => "0",
                        None => "unparseable",
                    };
                    example_rows.push(format!(
                        "{},{},{},{}",
                        test.id,
                        rendered,
                        if *label { 1 } else { 0 },
                        u8::from(prediction == Some(*label)),
                    ));
                    predictions.push(prediction);
                    labels.push(*label);
                }
                _ => {
                    return Err(ExperimentError::Config(
                        "payload type does not match the task".into(),
                    ))
                }
            }
            completions.push((test.id.clone(), completion));
        }
        per_example_rows.push(example_rows);

        let row = match cfg.task {
            Task::Caption => {
                let n = prepared.tests.len().max(1) as f64;
                caption_sums.iter().map(|s| s / n).collect()
            }
            Task::Property | Task::Yield => {
                vec![metrics::f1_binary(&predictions, &labels)?.f1]
            }
        };
        per_repeat_rows.push(row);
        all_completions.push(completions);
    }

    let names: Vec<&str> = match cfg.task {
        Task::Caption => CAPTION_METRICS.to_vec(),
        Task::Property | Task::Yield => vec!["f1"],
    };
    let per_example = PerExampleScores {
        header: match cfg.task {
            Task::Caption => format!("id,{}", CAPTION_METRICS.join(",")),
            Task::Property | Task::Yield => "id,prediction,label,correct".to_string(),
        },
        rows_per_repeat: per_example_rows,
    };
    Ok((
        ScoreReport::new(&names, &per_repeat_rows),
        all_completions,
        per_example,
    ))
}

#[derive(Serialize)]
struct Manifest<'a> {
    task: Task,
    strategy: StrategyKind,
    mmr: bool,
    k: usize,
    lambda: f64,
    repeats: usize,
    seed: u64,
    split_index: usize,
    pool_size: usize,
    test_size: usize,
    skipped: &'a [(String, String)],
}

/// Outcome of one experiment run.
pub struct RunOutput {
    pub report: ScoreReport,
    pub out_dir: PathBuf,
}

/// Retrieve, prompt, complete, and score every test item for every repeat;
/// write the report, raw completions, and a manifest into `out_dir`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput, ExperimentError> {
    let prepared = prepare(cfg)?;
    let k = cfg.effective_k();
    let (report, completions, per_example) = evaluate(cfg, &prepared, k, cfg.lambda, cfg.mmr)?;
    write_run_outputs(
        cfg,
        &prepared,
        k,
        &report,
        &completions,
        &per_example,
        &cfg.out_dir,
    )?;
    Ok(RunOutput {
        report,
        out_dir: cfg.out_dir.clone(),
    })
}

fn write_run_outputs(
    cfg: &ExperimentConfig,
    prepared: &Prepared,
    k: usize,
    report: &ScoreReport,
    completions: &[Vec<(String, String)>],
    per_example: &PerExampleScores,
    out_dir: &Path,
) -> Result<(), ExperimentError> {
    fs::create_dir_all(out_dir)?;
    let manifest = Manifest {
        task: cfg.task,
        strategy: cfg.strategy,
        mmr: cfg.mmr,
        k,
        lambda: cfg.lambda,
        repeats: cfg.repeats,
        seed: cfg.seed,
        split_index: cfg.split_index,
        pool_size: prepared.pool.len(),
        test_size: prepared.tests.len(),
        skipped: &prepared.skipped,
    };
    write_atomic(
        &out_dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest).unwrap().as_bytes(),
    )?;
    write_atomic(
        &out_dir.join("report.json"),
        serde_json::to_string_pretty(report).unwrap().as_bytes(),
    )?;
    write_atomic(&out_dir.join("report.csv"), report.to_csv().as_bytes())?;
    for (r, rows) in completions.iter().enumerate() {
        let mut text = String::new();
        for (id, completion) in rows {
            text.push_str(
                &serde_json::to_string(&serde_json::json!({
                    "id": id,
                    "completion": completion,
                }))
                .unwrap(),
            );
            text.push('\n');
        }
        write_atomic(
            &out_dir.join(format!("completions_r{r}.jsonl")),
            text.as_bytes(),
        )?;
    }
    if cfg.dump_per_example {
        for (r, rows) in per_example.rows_per_repeat.iter().enumerate() {
            let mut text = per_example.header.clone();
            text.push('\n');
            for row in rows {
                text.push_str(row);
                text.push('\n');
            }
            write_atomic(
                &out_dir.join(format!("per_example_r{r}.csv")),
                text.as_bytes(),
            )?;
        }
    }
    Ok(())
}

/// Write a file atomically: temp file in the same directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), ExperimentError> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.flush()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn print_ingest_summary(path: &Path, summary: &IngestSummary) {
    println!(
        "ingested {}: {} records, {} skipped",
        path.display(),
        summary.loaded,
        summary.skipped.len()
    );
    for (id, reason) in &summary.skipped {
        eprintln!("  skipped {id}: {reason}");
    }
}

/// Sweep demonstration counts; writes `sweep_k.csv` to the out dir.
pub fn sweep_k(
    cfg: &ExperimentConfig,
    ks: &[usize],
) -> Result<Vec<(usize, ScoreReport)>, ExperimentError> {
    let prepared = prepare(cfg)?;
    let mut out = Vec::with_capacity(ks.len());
    for &k in ks {
        let (report, _, _) = evaluate(cfg, &prepared, k, cfg.lambda, cfg.mmr && k > 0)?;
        out.push((k, report));
    }
    write_sweep_csv(
        cfg,
        "sweep_k.csv",
        "k",
        out.iter().map(|(k, r)| (k.to_string(), r)),
    )?;
    Ok(out)
}

/// Sweep the MMR balance; writes `sweep_lambda.csv` to the out dir. MMR is
/// forced on, so this needs an embedding strategy.
pub fn sweep_lambda(
    cfg: &ExperimentConfig,
    lambdas: &[f64],
) -> Result<Vec<(f64, ScoreReport)>, ExperimentError> {
    let mut mmr_cfg = cfg.clone();
    mmr_cfg.mmr = true;
    let prepared = prepare(&mmr_cfg)?;
    let k = cfg.effective_k();
    let mut out = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let (report, _, _) = evaluate(&mmr_cfg, &prepared, k, lambda, true)?;
        out.push((lambda, report));
    }
    write_sweep_csv(
        cfg,
        "sweep_lambda.csv",
        "lambda",
        out.iter().map(|(l, r)| (format!("{l}"), r)),
    )?;
    Ok(out)
}

fn write_sweep_csv<'a>(
    cfg: &ExperimentConfig,
    filename: &str,
    key: &str,
    rows: impl Iterator<Item = (String, &'a ScoreReport)>,
) -> Result<(), ExperimentError> {
    fs::create_dir_all(&cfg.out_dir)?;
    let mut text = String::new();
    let mut header_done = false;
    for (value, report) in rows {
        if !header_done {
            text.push_str(key);
            for m in &report.metrics {
                text.push_str(&format!(",{}", m.name));
            }
            text.push('\n');
            header_done = true;
        }
        text.push_str(&value);
        for m in &report.metrics {
            text.push_str(&format!(",{:.6}", m.mean));
        }
        text.push('\n');
    }
    write_atomic(&cfg.out_dir.join(filename), text.as_bytes())
}

/// The four training-time ablation variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationVariant {
    Full,
    WoMorgan,
    GamicBert,
    WoMorganBert,
}

impl AblationVariant {
    pub const ALL: [AblationVariant; 4] = [
        AblationVariant::Full,
        AblationVariant::WoMorgan,
        AblationVariant::GamicBert,
        AblationVariant::WoMorganBert,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            AblationVariant::Full => "full",
            AblationVariant::WoMorgan => "wo_morgan",
            AblationVariant::GamicBert => "gamic_bert",
            AblationVariant::WoMorganBert => "wo_morgan_bert",
        }
    }

    fn morgan_sampling(&self) -> bool {
        matches!(self, AblationVariant::Full | AblationVariant::GamicBert)
    }

    fn uses_bert(&self) -> bool {
        matches!(
            self,
            AblationVariant::GamicBert | AblationVariant::WoMorganBert
        )
    }

    pub fn parse(text: &str) -> Option<AblationVariant> {
        AblationVariant::ALL.into_iter().find(|v| v.name() == text)
    }
}

/// Train and evaluate one ablation variant: flip the sampling flag and the
/// embedding provenance, then run the captioning experiment with the fresh
/// checkpoint. Outputs land under `out_dir/<variant>/`.
pub fn run_ablation(
    cfg: &ExperimentConfig,
    variant: AblationVariant,
) -> Result<RunOutput, ExperimentError> {
    let emb_path = if variant.uses_bert() {
        cfg.embeddings_bert.as_ref().ok_or_else(|| {
            ExperimentError::Config(format!(
                "variant '{}' needs an 'embeddings_bert' file",
                variant.name()
            ))
        })?
    } else {
        cfg.embeddings
            .as_ref()
            .ok_or_else(|| ExperimentError::Config("ablations need an 'embeddings' file".into()))?
    };
    let index = load_embedding_file(emb_path)?;

    let (records, summary) = ingest(&cfg.dataset, Task::Caption)?;
    print_ingest_summary(&cfg.dataset, &summary);
    let split = resolve_split(&records, &cfg.split_seeds, cfg.split_index)?;
    let to_items = |indices: &[usize]| -> Vec<TrainItem> {
        indices
            .iter()
            .map(|&i| {
                let record = &records[i];
                let graph = parse_smiles(&record.smiles).expect("validated at ingest");
                let fingerprint = morgan_fingerprint(&graph, cfg.fp_radius, cfg.fp_nbits);
                TrainItem {
                    id: record.id.clone(),
                    graph,
                    fingerprint,
                }
            })
            .collect()
    };
    let mut encoder_cfg = cfg.encoder.clone().unwrap_or_default();
    encoder_cfg.out_dim = index.dim();
    let mut train_cfg = cfg.train.to_train_config(cfg.seed);
    train_cfg.morgan_sampling = variant.morgan_sampling();
    let trained = trainer::train(
        &to_items(&split.train),
        &to_items(&split.valid),
        &index,
        &encoder_cfg,
        &train_cfg,
    )?;

    let variant_dir = cfg.out_dir.join(variant.name());
    fs::create_dir_all(&variant_dir)?;
    let ckpt_path = variant_dir.join("checkpoint.gckp");
    let meta = serde_json::to_string(&CheckpointMeta {
        kind: "gamic".into(),
        encoder: encoder_cfg,
        provenance: index.provenance().to_string(),
    })
    .unwrap();
    save_checkpoint(&ckpt_path, &trained.params, &meta)?;

    let mut run_cfg = cfg.clone();
    run_cfg.task = Task::Caption;
    run_cfg.strategy = StrategyKind::Gamic;
    run_cfg.checkpoint = Some(ckpt_path);
    run_cfg.out_dir = variant_dir;
    run_experiment(&run_cfg)
}
