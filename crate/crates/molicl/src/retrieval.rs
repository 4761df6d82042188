//! Demonstration pools and selection strategies: random, scaffold
//! (Tanimoto), embedding top-k, and MMR diverse selection.
//!
//! MMR picks greedily. The first pick is always the nearest neighbor of the
//! query. Each later step minimizes
//! `(1 - lambda) * d(z, z_query) - lambda * agg_j d(z, z_j)` over remaining
//! candidates, where `d` is Euclidean distance on unit vectors, `j` ranges
//! over already-selected items, and `agg` is `min` (classic MMR) or `sum`.
//! Ties always break toward the lexicographically smallest id.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::RngExt;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::binio;
use crate::encoder::EmbeddingVector;
use crate::fingerprint::{morgan_fingerprint, tanimoto, FingerprintVector};
use crate::molgraph::parse_smiles;
use crate::textemb::normalize_f32_stable;

/// The value a demonstration carries: a caption or a binary label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Payload {
    Caption(String),
    Label(bool),
}

impl Payload {
    pub fn as_caption(&self) -> Option<&str> {
        match self {
            Payload::Caption(c) => Some(c),
            Payload::Label(_) => None,
        }
    }

    pub fn as_label(&self) -> Option<bool> {
        match self {
            Payload::Caption(_) => None,
            Payload::Label(l) => Some(*l),
        }
    }
}

/// One indexed demonstration.
#[derive(Debug, Clone)]
pub struct PoolEntry {
    pub id: String,
    pub smiles: String,
    pub payload: Payload,
    pub fingerprint: FingerprintVector,
    pub embedding: Option<EmbeddingVector>,
}

/// Immutable indexed collection of demonstrations.
#[derive(Debug, Clone)]
pub struct DemonstrationPool {
    entries: Vec<PoolEntry>,
    fp_radius: usize,
    fp_nbits: usize,
    embedding_dim: Option<usize>,
}

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("retrieval config error: {0}")]
    Config(String),
    #[error("strategy error: {0}")]
    Strategy(String),
    #[error("bad magic or version in index file")]
    BadMagic,
    #[error("index format error: {0}")]
    Format(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<io::Error> for RetrievalError {
    fn from(e: io::Error) -> Self {
        RetrievalError::Io(e.to_string())
    }
}

/// Top-k selection strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Uniform sample without replacement, in draw order.
    Random,
    /// Tanimoto similarity between Morgan fingerprints, descending.
    Scaffold,
    /// Euclidean distance between embeddings, ascending.
    Embedding,
}

/// How MMR aggregates distances to the already-selected set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiversityAggregation {
    Min,
    Sum,
}

#[derive(Debug, Clone)]
pub struct MmrConfig {
    pub k: usize,
    pub lambda: f64,
    pub aggregation: DiversityAggregation,
}

impl MmrConfig {
    pub fn new(k: usize, lambda: f64) -> MmrConfig {
        MmrConfig {
            k,
            lambda,
            aggregation: DiversityAggregation::Min,
        }
    }

    fn validate(&self) -> Result<(), RetrievalError> {
        if self.k == 0 {
            return Err(RetrievalError::Config("k must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(RetrievalError::Config(format!(
                "lambda {} is outside [0, 1]",
                self.lambda
            )));
        }
        Ok(())
    }
}

/// The query side of a retrieval call; strategies use the part they need.
#[derive(Debug, Clone)]
pub struct PoolQuery {
    pub fingerprint: Option<FingerprintVector>,
    pub embedding: Option<EmbeddingVector>,
}

/// Callback that embeds a parsed graph, or explains why it cannot.
pub type EmbedderFn<'a> =
    dyn Fn(&crate::molgraph::MolecularGraph) -> Result<EmbeddingVector, String> + 'a;

/// Build a pool from `(id, smiles, payload)` records: parse, fingerprint,
/// and optionally embed every entry. Records that fail to parse or embed are
/// skipped and reported.
pub fn build_pool(
    records: &[(String, String, Payload)],
    fp_radius: usize,
    fp_nbits: usize,
    embedder: Option<&EmbedderFn>,
) -> (DemonstrationPool, Vec<(String, String)>) {
    let mut entries = Vec::with_capacity(records.len());
    let mut skipped = Vec::new();
    for (id, smiles, payload) in records {
        let graph = match parse_smiles(smiles) {
            Ok(g) => g,
            Err(e) => {
                skipped.push((id.clone(), e.to_string()));
                continue;
            }
        };
        let embedding = match embedder {
            Some(embed) => match embed(&graph) {
                Ok(z) => Some(z),
                Err(e) => {
                    skipped.push((id.clone(), e));
                    continue;
                }
            },
            None => None,
        };
        entries.push(PoolEntry {
            id: id.clone(),
            smiles: smiles.clone(),
            payload: payload.clone(),
            fingerprint: morgan_fingerprint(&graph, fp_radius, fp_nbits),
            embedding,
        });
    }
    let embedding_dim = entries
        .iter()
        .find_map(|e| e.embedding.as_ref().map(|z| z.dim()));
    (
        DemonstrationPool {
            entries,
            fp_radius,
            fp_nbits,
            embedding_dim,
        },
        skipped,
    )
}

impl DemonstrationPool {
    /// Assemble a pool from prebuilt entries, e.g. with externally supplied
    /// embeddings. All embeddings must share one dimension.
    pub fn from_entries(
        entries: Vec<PoolEntry>,
        fp_radius: usize,
        fp_nbits: usize,
    ) -> Result<DemonstrationPool, RetrievalError> {
        let embedding_dim = entries
            .iter()
            .find_map(|e| e.embedding.as_ref().map(|z| z.dim()));
        if let Some(dim) = embedding_dim {
            for e in &entries {
                if let Some(z) = &e.embedding {
                    if z.dim() != dim {
                        return Err(RetrievalError::Config(format!(
                            "entry '{}' has embedding dim {}, expected {dim}",
                            e.id,
                            z.dim()
                        )));
                    }
                }
            }
        }
        Ok(DemonstrationPool {
            entries,
            fp_radius,
            fp_nbits,
            embedding_dim,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[PoolEntry] {
        &self.entries
    }

    pub fn entry(&self, i: usize) -> &PoolEntry {
        &self.entries[i]
    }

    pub fn embedding_dim(&self) -> Option<usize> {
        self.embedding_dim
    }

    pub fn fp_config(&self) -> (usize, usize) {
        (self.fp_radius, self.fp_nbits)
    }

    fn has_embeddings(&self) -> Result<(), RetrievalError> {
        if self.entries.iter().any(|e| e.embedding.is_none()) {
            return Err(RetrievalError::Strategy(
                "pool entries are missing embeddings".into(),
            ));
        }
        Ok(())
    }
}

const INDEX_MAGIC: &[u8] = b"GIDX\x01";

/// Write a pool index file: `GIDX\x01`, embedding presence flag and
/// dimension, fingerprint radius and width, then per entry the id, SMILES,
/// payload, optional f32 embedding, and fingerprint words.
pub fn save_pool(pool: &DemonstrationPool, path: &Path) -> Result<(), RetrievalError> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(INDEX_MAGIC)?;
    let dim = pool.embedding_dim.unwrap_or(0);
    w.write_all(&[u8::from(pool.embedding_dim.is_some())])?;
    binio::write_u32(&mut w, dim as u32)?;
    binio::write_u32(&mut w, pool.fp_radius as u32)?;
    binio::write_u32(&mut w, pool.fp_nbits as u32)?;
    binio::write_u32(&mut w, pool.entries.len() as u32)?;
    for entry in &pool.entries {
        binio::write_str(&mut w, &entry.id)?;
        binio::write_str(&mut w, &entry.smiles)?;
        match &entry.payload {
            Payload::Caption(c) => {
                w.write_all(&[0u8])?;
                binio::write_str(&mut w, c)?;
            }
            Payload::Label(l) => {
                w.write_all(&[1u8, u8::from(*l)])?;
            }
        }
        if pool.embedding_dim.is_some() {
            let z = entry.embedding.as_ref().ok_or_else(|| {
                RetrievalError::Format(format!("entry '{}' is missing its embedding", entry.id))
            })?;
            if z.dim() != dim {
                return Err(RetrievalError::Format(format!(
                    "entry '{}' has embedding dim {}, expected {dim}",
                    entry.id,
                    z.dim()
                )));
            }
            let mut f32s: Vec<f32> = z.values().iter().map(|&v| v as f32).collect();
            normalize_f32_stable(&mut f32s).map_err(|e| RetrievalError::Format(e.to_string()))?;
            for v in f32s {
                binio::write_f32(&mut w, v)?;
            }
        }
        binio::write_u32(&mut w, entry.fingerprint.words().len() as u32)?;
        for word in entry.fingerprint.words() {
            binio::write_u64(&mut w, *word)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Read a pool index written by [`save_pool`]. Embeddings come back at f32
/// precision.
pub fn load_pool(path: &Path) -> Result<DemonstrationPool, RetrievalError> {
    let mut r = BufReader::new(File::open(path)?);
    if !binio::expect_magic(&mut r, INDEX_MAGIC)? {
        return Err(RetrievalError::BadMagic);
    }
    let mut flag = [0u8; 1];
    r.read_exact(&mut flag)?;
    let has_embeddings = flag[0] != 0;
    let dim = binio::read_u32(&mut r)? as usize;
    let fp_radius = binio::read_u32(&mut r)? as usize;
    let fp_nbits = binio::read_u32(&mut r)? as usize;
    let count = binio::read_u32(&mut r)? as usize;
    let mut entries = Vec::with_capacity(count);
    for _ in 0..count {
        let id = binio::read_str(&mut r)?;
        let smiles = binio::read_str(&mut r)?;
        let mut kind = [0u8; 1];
        r.read_exact(&mut kind)?;
        let payload = match kind[0] {
            0 => Payload::Caption(binio::read_str(&mut r)?),
            1 => {
                let mut b = [0u8; 1];
                r.read_exact(&mut b)?;
                Payload::Label(b[0] != 0)
            }
            other => {
                return Err(RetrievalError::Format(format!(
                    "unknown payload kind {other} for id '{id}'"
                )))
            }
        };
        let embedding = if has_embeddings {
            let mut values = Vec::with_capacity(dim);
            for _ in 0..dim {
                values.push(binio::read_f32(&mut r)? as f64);
            }
            Some(EmbeddingVector::from_normalized(values))
        } else {
            None
        };
        let nwords = binio::read_u32(&mut r)? as usize;
        let mut words = Vec::with_capacity(nwords);
        for _ in 0..nwords {
            words.push(binio::read_u64(&mut r)?);
        }
        entries.push(PoolEntry {
            id,
            smiles,
            payload,
            fingerprint: FingerprintVector::from_parts(words, fp_nbits, fp_radius),
            embedding,
        });
    }
    Ok(DemonstrationPool {
        entries,
        fp_radius,
        fp_nbits,
        embedding_dim: has_embeddings.then_some(dim),
    })
}

/// Select the top `k` demonstrations, most similar first. Random uses the
/// run seed; scaffold and embedding break ties toward the smallest id.
pub fn select_topk(
    query: &PoolQuery,
    pool: &DemonstrationPool,
    k: usize,
    strategy: Strategy,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<usize>, RetrievalError> {
    if k > pool.len() {
        return Err(RetrievalError::Config(format!(
            "k = {k} exceeds pool size {}",
            pool.len()
        )));
    }
    match strategy {
        Strategy::Random => {
            // partial Fisher-Yates: draw order is the output order
            let mut indices: Vec<usize> = (0..pool.len()).collect();
            for i in 0..k {
                let j = i + rng.random_range(0..indices.len() - i);
                indices.swap(i, j);
            }
            indices.truncate(k);
            Ok(indices)
        }
        Strategy::Scaffold => {
            let query_fp = query.fingerprint.as_ref().ok_or_else(|| {
                RetrievalError::Strategy("scaffold strategy needs a query fingerprint".into())
            })?;
            let mut scored: Vec<(usize, f64)> = Vec::with_capacity(pool.len());
            for (i, entry) in pool.entries.iter().enumerate() {
                let sim = tanimoto(query_fp, &entry.fingerprint)
                    .map_err(|e| RetrievalError::Strategy(e.to_string()))?;
                scored.push((i, sim));
            }
            scored.sort_by(|a, b| {
                b.1.partial_cmp(&a.1)
                    .unwrap()
                    .then_with(|| pool.entries[a.0].id.cmp(&pool.entries[b.0].id))
            });
            Ok(scored.into_iter().take(k).map(|(i, _)| i).collect())
        }
        Strategy::Embedding => {
            let query_z = query.embedding.as_ref().ok_or_else(|| {
                RetrievalError::Strategy("embedding strategy needs a query embedding".into())
            })?;
            pool.has_embeddings()?;
            let mut scored: Vec<(usize, f64)> = pool
                .entries
                .iter()
                .enumerate()
                .map(|(i, e)| (i, query_z.euclidean(e.embedding.as_ref().unwrap())))
                .collect();
            scored.sort_by(|a, b| {
                a.1.partial_cmp(&b.1)
                    .unwrap()
                    .then_with(|| pool.entries[a.0].id.cmp(&pool.entries[b.0].id))
            });
            Ok(scored.into_iter().take(k).map(|(i, _)| i).collect())
        }
    }
}

/// Greedy MMR selection in selection order; see the module docs for the
/// objective. With `lambda = 0` this equals embedding top-k.
pub fn select_mmr(
    query: &EmbeddingVector,
    pool: &DemonstrationPool,
    cfg: &MmrConfig,
) -> Result<Vec<usize>, RetrievalError> {
    cfg.validate()?;
    if cfg.k > pool.len() {
        return Err(RetrievalError::Config(format!(
            "k = {} exceeds pool size {}",
            cfg.k,
            pool.len()
        )));
    }
    pool.has_embeddings()?;
    let embedding = |i: usize| pool.entries[i].embedding.as_ref().unwrap();
    let relevance: Vec<f64> = (0..pool.len())
        .map(|i| query.euclidean(embedding(i)))
        .collect();

    let mut selected: Vec<usize> = Vec::with_capacity(cfg.k);
    let mut remaining: Vec<usize> = (0..pool.len()).collect();
    while selected.len() < cfg.k {
        let mut best: Option<(f64, &str, usize)> = None;
        for &i in &remaining {
            let score = if selected.is_empty() {
                relevance[i]
            } else {
                let diversity = match cfg.aggregation {
                    DiversityAggregation::Min => selected
                        .iter()
                        .map(|&j| embedding(i).euclidean(embedding(j)))
                        .fold(f64::INFINITY, f64::min),
                    DiversityAggregation::Sum => selected
                        .iter()
                        .map(|&j| embedding(i).euclidean(embedding(j)))
                        .sum(),
                };
                (1.0 - cfg.lambda) * relevance[i] - cfg.lambda * diversity
            };
            let id = pool.entries[i].id.as_str();
            let better = match &best {
                None => true,
                Some((s, tie_id, _)) => score < *s || (score == *s && id < *tie_id),
            };
            if better {
                best = Some((score, id, i));
            }
        }
        let (_, _, pick) = best.expect("remaining candidates");
        selected.push(pick);
        remaining.retain(|&i| i != pick);
    }
    Ok(selected)
}
