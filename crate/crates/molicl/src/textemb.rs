//! Caption embeddings supplied from outside: a precomputed embedding file or
//! an embedding HTTP service. Transformer forward passes never happen here;
//! whoever produced the file is expected to have mean-pooled final hidden
//! states into one fixed-size vector per caption.
//!
//! The embedding file format (`GEMB\x01`): the 5-byte magic, u32 LE
//! dimension, u32 LE record count, then per record a u16 LE id length, the
//! UTF-8 id bytes, and `dim` f32 LE values. Vectors are stored unit-norm;
//! loading re-normalizes anything that drifted and a load/save cycle is
//! byte-identical.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::time::Duration;

use serde::Deserialize;
use thiserror::Error;

use crate::binio;

const MAGIC: &[u8] = b"GEMB\x01";

#[derive(Debug, Error)]
pub enum TextEmbError {
    #[error("bad magic or version in embedding file")]
    BadMagic,
    #[error("format error: {0}")]
    Format(String),
    #[error("duplicate id '{0}' in embedding file")]
    DuplicateId(String),
    #[error("request failed after {attempts} attempts: {message}")]
    Retryable { attempts: usize, message: String },
    #[error("io error: {0}")]
    Io(String),
}

impl From<io::Error> for TextEmbError {
    fn from(e: io::Error) -> Self {
        TextEmbError::Io(e.to_string())
    }
}

/// Normalize in f64 and round to f32 until the f32 vector's norm is within
/// 1e-6 of one, so that normalization is idempotent at the byte level.
pub(crate) fn normalize_f32_stable(values: &mut [f32]) -> Result<(), TextEmbError> {
    for _ in 0..8 {
        let norm: f64 = values
            .iter()
            .map(|&v| (v as f64) * (v as f64))
            .sum::<f64>()
            .sqrt();
        if norm < 1e-12 {
            return Err(TextEmbError::Format(
                "cannot normalize a zero vector".into(),
            ));
        }
        if (norm - 1.0).abs() <= 1e-6 {
            return Ok(());
        }
        for v in values.iter_mut() {
            *v = ((*v as f64) / norm) as f32;
        }
    }
    Ok(())
}

/// An immutable in-memory map from caption id to unit-norm embedding.
#[derive(Debug, Clone)]
pub struct TextEmbeddingIndex {
    dim: usize,
    provenance: String,
    ids: Vec<String>,
    vectors: Vec<Vec<f64>>,
    by_id: BTreeMap<String, usize>,
}

impl TextEmbeddingIndex {
    /// Build an index from raw vectors, normalizing each one.
    pub fn build(
        dim: usize,
        provenance: impl Into<String>,
        entries: Vec<(String, Vec<f64>)>,
    ) -> Result<TextEmbeddingIndex, TextEmbError> {
        let mut index = TextEmbeddingIndex {
            dim,
            provenance: provenance.into(),
            ids: Vec::with_capacity(entries.len()),
            vectors: Vec::with_capacity(entries.len()),
            by_id: BTreeMap::new(),
        };
        for (id, values) in entries {
            if values.len() != dim {
                return Err(TextEmbError::Format(format!(
                    "vector for '{id}' has {} values, expected {dim}",
                    values.len()
                )));
            }
            let mut f32s: Vec<f32> = values.iter().map(|&v| v as f32).collect();
            normalize_f32_stable(&mut f32s)
                .map_err(|_| TextEmbError::Format(format!("zero vector for id '{id}'")))?;
            index.push(id, f32s.iter().map(|&v| v as f64).collect())?;
        }
        Ok(index)
    }

    fn push(&mut self, id: String, vector: Vec<f64>) -> Result<(), TextEmbError> {
        if self.by_id.contains_key(&id) {
            return Err(TextEmbError::DuplicateId(id));
        }
        self.by_id.insert(id.clone(), self.ids.len());
        self.ids.push(id);
        self.vectors.push(vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn set_provenance(&mut self, provenance: impl Into<String>) {
        self.provenance = provenance.into();
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.by_id.get(id).map(|&i| self.vectors[i].as_slice())
    }

    pub fn contains(&self, id: &str) -> bool {
        self.by_id.contains_key(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.ids.iter().map(|s| s.as_str())
    }

    /// Write the index in canonical `GEMB\x01` form, in stored record order.
    pub fn save(&self, path: &Path) -> Result<(), TextEmbError> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(MAGIC)?;
        binio::write_u32(&mut w, self.dim as u32)?;
        binio::write_u32(&mut w, self.ids.len() as u32)?;
        for (id, vector) in self.ids.iter().zip(&self.vectors) {
            binio::write_str(&mut w, id)?;
            for &v in vector {
                binio::write_f32(&mut w, v as f32)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Load an embedding file. Vectors are normalized on ingest (already-unit
/// vectors are kept bit-for-bit); duplicate ids are rejected. Provenance
/// defaults to the file stem, e.g. `toy_scibert.gemb` gives `toy_scibert`.
pub fn load_embedding_file(path: &Path) -> Result<TextEmbeddingIndex, TextEmbError> {
    let mut r = BufReader::new(File::open(path)?);
    if !binio::expect_magic(&mut r, MAGIC)? {
        return Err(TextEmbError::BadMagic);
    }
    let dim = binio::read_u32(&mut r)? as usize;
    if dim == 0 {
        return Err(TextEmbError::Format("dimension is zero".into()));
    }
    let count = binio::read_u32(&mut r)? as usize;
    let provenance = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "unknown".into());
    let mut index = TextEmbeddingIndex {
        dim,
        provenance,
        ids: Vec::with_capacity(count),
        vectors: Vec::with_capacity(count),
        by_id: BTreeMap::new(),
    };
    for _ in 0..count {
        let id = binio::read_str(&mut r)?;
        let mut values = Vec::with_capacity(dim);
        for _ in 0..dim {
            values.push(binio::read_f32(&mut r)?);
        }
        normalize_f32_stable(&mut values)
            .map_err(|_| TextEmbError::Format(format!("zero vector for id '{id}'")))?;
        index.push(id, values.iter().map(|&v| v as f64).collect())?;
    }
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(TextEmbError::Format("trailing bytes after records".into()));
    }
    Ok(index)
}

/// Connection settings for an embedding HTTP service. The auth token is
/// normally resolved from an environment variable by the config layer.
#[derive(Debug, Clone)]
pub struct EmbedEndpoint {
    pub url: String,
    pub auth_token: Option<String>,
    pub max_retries: usize,
    pub backoff_ms: u64,
    pub timeout_ms: u64,
}

impl EmbedEndpoint {
    pub fn new(url: impl Into<String>) -> EmbedEndpoint {
        EmbedEndpoint {
            url: url.into(),
            auth_token: None,
            max_retries: 3,
            backoff_ms: 200,
            timeout_ms: 30_000,
        }
    }
}

#[derive(Deserialize)]
struct EmbeddingsResponse {
    embeddings: Vec<Vec<f64>>,
}

/// POST `{"texts": [...]}` and read `{"embeddings": [[...], ...]}`.
/// Order is preserved and results are normalized. Transport failures are
/// retried with exponential backoff up to `max_retries` extra attempts.
pub fn fetch_embeddings(
    texts: &[String],
    endpoint: &EmbedEndpoint,
) -> Result<Vec<Vec<f64>>, TextEmbError> {
    if texts.is_empty() {
        return Ok(Vec::new());
    }
    let body = serde_json::json!({ "texts": texts });
    let mut last_error = String::new();
    let attempts = endpoint.max_retries + 1;
    for attempt in 0..attempts {
        if attempt > 0 {
            std::thread::sleep(Duration::from_millis(
                endpoint.backoff_ms << (attempt - 1).min(8),
            ));
        }
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(endpoint.timeout_ms)))
            .build()
            .into();
        let mut request = agent.post(&endpoint.url);
        if let Some(token) = &endpoint.auth_token {
            request = request.header("Authorization", &format!("Bearer {token}"));
        }
        match request.send_json(&body) {
            Ok(mut response) => {
                let parsed: EmbeddingsResponse = response
                    .body_mut()
                    .read_json()
                    .map_err(|e| TextEmbError::Format(format!("bad response body: {e}")))?;
                return finalize_embeddings(parsed.embeddings, texts.len());
            }
            Err(e) => last_error = e.to_string(),
        }
    }
    Err(TextEmbError::Retryable {
        attempts,
        message: last_error,
    })
}

fn finalize_embeddings(
    embeddings: Vec<Vec<f64>>,
    expected: usize,
) -> Result<Vec<Vec<f64>>, TextEmbError> {
    if embeddings.len() != expected {
        return Err(TextEmbError::Format(format!(
            "server returned {} vectors for {} texts",
            embeddings.len(),
            expected
        )));
    }
    let dim = embeddings.first().map(|v| v.len()).unwrap_or(0);
    let mut out = Vec::with_capacity(embeddings.len());
    for (i, values) in embeddings.into_iter().enumerate() {
        if values.len() != dim || dim == 0 {
            return Err(TextEmbError::Format(format!(
                "vector {i} has {} values, expected {dim}",
                values.len()
            )));
        }
        let norm: f64 = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-12 {
            return Err(TextEmbError::Format(format!("vector {i} is zero")));
        }
        out.push(values.into_iter().map(|v| v / norm).collect());
    }
    Ok(out)
}
