//! Text embeddings behind a provider contract, plus cosine similarity.
//!
//! Two providers ship: [`HashedNgram`], a deterministic character n-gram
//! feature hasher that needs nothing external, and [`RemoteEmbedder`], which
//! calls an embedding service speaking the common
//! `{"model", "input": [...]} -> {"data": [{"embedding": [...]}]}` shape.
//! [`Embedder`] wraps either one with a per-text cache and a dimension check.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use xxhash_rust::xxh64::xxh64;

use crate::error::{Error, Result};
use crate::http::JsonClient;

pub const DEFAULT_DIM: usize = 256;
pub const MIN_HASHED_DIM: usize = 8;
const NGRAM_HASH_SEED: u64 = 0x5347_4d55_5446_0001;
const NGRAM_SIZES: [usize; 3] = [3, 4, 5];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Embedding(Vec<f64>);

impl Embedding {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Provider("embedding contains non-finite values".into()));
        }
        Ok(Self(values))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Cosine similarity; 0 when either vector has zero norm.
pub fn cosine(a: &Embedding, b: &Embedding) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            actual: b.dim(),
        });
    }
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    let dot: f64 = a.0.iter().zip(&b.0).map(|(x, y)| x * y).sum();
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

pub trait EmbeddingProvider: Send + Sync {
    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Embedding>>;

    /// Output dimension when known without calling out.
    fn dim(&self) -> Option<usize>;

    fn describe(&self) -> String;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    #[default]
    #[serde(alias = "hashed")]
    HashedNgram,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbeddingProviderConfig {
    pub kind: ProviderKind,
    pub dim: usize,
    pub endpoint_url: Option<String>,
    pub api_key_env: Option<String>,
    pub model_name: String,
    pub timeout_ms: u64,
    pub max_retries: u32,
}

impl Default for EmbeddingProviderConfig {
    fn default() -> Self {
        Self {
            kind: ProviderKind::HashedNgram,
            dim: DEFAULT_DIM,
            endpoint_url: None,
            api_key_env: Some("SMUTF_EMBED_API_KEY".into()),
            model_name: "paraphrase-multilingual-mpnet-base-v2".into(),
            timeout_ms: 30_000,
            max_retries: 2,
        }
    }
}

impl EmbeddingProviderConfig {
    pub fn validate(&self) -> Result<()> {
        match self.kind {
            ProviderKind::HashedNgram if self.dim < MIN_HASHED_DIM => Err(Error::Config(format!(
                "embedding dim must be at least {MIN_HASHED_DIM}, got {}",
                self.dim
            ))),
            ProviderKind::Remote if self.endpoint_url.is_none() => Err(Error::Config(
                "remote embedder requires an endpoint URL".into(),
            )),
            _ => Ok(()),
        }
    }
}

/// Feature-hashed character n-grams (n = 3, 4, 5), L2-normalized.
#[derive(Debug, Clone)]
pub struct HashedNgram {
    dim: usize,
}

impl HashedNgram {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < MIN_HASHED_DIM {
            return Err(Error::Config(format!(
                "embedding dim must be at least {MIN_HASHED_DIM}, got {dim}"
            )));
        }
        Ok(Self { dim })
    }

    pub fn embed_one(&self, text: &str) -> Embedding {
        let mut padded = vec!['^'];
        padded.extend(text.to_lowercase().chars());
        padded.push('$');

        let mut counts = vec![0.0; self.dim];
        let mut buf = String::new();
        for n in NGRAM_SIZES {
            for gram in padded.windows(n) {
                buf.clear();
                buf.extend(gram);
                let bucket = xxh64(buf.as_bytes(), NGRAM_HASH_SEED) % self.dim as u64;
                counts[bucket as usize] += 1.0;
            }
        }
        let norm = counts.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            counts.iter_mut().for_each(|v| *v /= norm);
        }
        Embedding(counts)
    }
}

impl EmbeddingProvider for HashedNgram {
    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Embedding>> {
        Ok(texts.iter().map(|t| self.embed_one(t)).collect())
    }

    fn dim(&self) -> Option<usize> {
        Some(self.dim)
    }

    fn describe(&self) -> String {
        format!("hashed_ngram(dim={})", self.dim)
    }
}

#[derive(Serialize)]
struct EmbeddingRequest<'a> {
    model: &'a str,
    input: &'a [&'a str],
}

#[derive(Deserialize)]
struct EmbeddingResponse {
    data: Vec<EmbeddingDatum>,
}

#[derive(Deserialize)]
struct EmbeddingDatum {
    embedding: Vec<f64>,
}

pub struct RemoteEmbedder {
    client: JsonClient,
    model: String,
}

impl RemoteEmbedder {
    pub fn new(config: &EmbeddingProviderConfig) -> Result<Self> {
        let endpoint = config.endpoint_url.as_deref().ok_or_else(|| {
            Error::Config("remote embedder requires an endpoint URL".into())
        })?;
        Ok(Self {
            client: JsonClient::new(
                endpoint,
                config.api_key_env.as_deref(),
                config.timeout_ms,
                config.max_retries,
            ),
            model: config.model_name.clone(),
        })
    }
}

impl EmbeddingProvider for RemoteEmbedder {
    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Embedding>> {
        let resp: EmbeddingResponse = self
            .client
            .post(&EmbeddingRequest {
                model: &self.model,
                input: texts,
            })
            .map_err(Error::Provider)?;
        if resp.data.len() != texts.len() {
            return Err(Error::Provider(format!(
                "{}: expected {} embeddings, got {}",
                self.client.endpoint(),
                texts.len(),
                resp.data.len()
            )));
        }
        resp.data.into_iter().map(|d| Embedding::new(d.embedding)).collect()
    }

    fn dim(&self) -> Option<usize> {
        None
    }

    fn describe(&self) -> String {
        format!("remote({}, model={})", self.client.endpoint(), self.model)
    }
}

/// Provider plus an exact-text cache; enforces one dimension per run.
pub struct Embedder {
    provider: Box<dyn EmbeddingProvider>,
    cache: Mutex<HashMap<String, Embedding>>,
    dim: Mutex<Option<usize>>,
    provider_texts: AtomicUsize,
}

impl Embedder {
    pub fn new(provider: Box<dyn EmbeddingProvider>) -> Self {
        let dim = provider.dim();
        Self {
            provider,
            cache: Mutex::new(HashMap::new()),
            dim: Mutex::new(dim),
            provider_texts: AtomicUsize::new(0),
        }
    }

    pub fn from_config(config: &EmbeddingProviderConfig) -> Result<Self> {
        config.validate()?;
        Ok(match config.kind {
            ProviderKind::HashedNgram => Self::new(Box::new(HashedNgram::new(config.dim)?)),
            ProviderKind::Remote => Self::new(Box::new(RemoteEmbedder::new(config)?)),
        })
    }

    pub fn hashed(dim: usize) -> Result<Self> {
        Ok(Self::new(Box::new(HashedNgram::new(dim)?)))
    }

    pub fn describe(&self) -> String {
        self.provider.describe()
    }

    /// Number of texts sent to the underlying provider so far.
    pub fn provider_calls(&self) -> usize {
        self.provider_texts.load(Ordering::Relaxed)
    }

    pub fn embed(&self, text: &str) -> Result<Embedding> {
        Ok(self.embed_many(&[text])?.remove(0))
    }

    pub fn embed_many(&self, texts: &[&str]) -> Result<Vec<Embedding>> {
        let mut missing: Vec<&str> = {
            let cache = self.cache.lock().unwrap();
            texts.iter().copied().filter(|t| !cache.contains_key(*t)).collect()
        };
        missing.sort_unstable();
        missing.dedup();
        if !missing.is_empty() {
            let fresh = self.provider.embed_batch(&missing)?;
            self.provider_texts.fetch_add(missing.len(), Ordering::Relaxed);
            for e in &fresh {
                self.check_dim(e.dim())?;
            }
            let mut cache = self.cache.lock().unwrap();
            for (text, e) in missing.iter().zip(fresh) {
                cache.insert((*text).to_owned(), e);
            }
        }
        let cache = self.cache.lock().unwrap();
        Ok(texts.iter().map(|t| cache[*t].clone()).collect())
    }

    /// Arithmetic mean of the member embeddings; not re-normalized.
    pub fn embed_value_set(&self, values: &[String]) -> Result<Embedding> {
        if values.is_empty() {
            return Ok(Embedding::zeros(self.dim()?));
        }
        let refs: Vec<&str> = values.iter().map(String::as_str).collect();
        let embedded = self.embed_many(&refs)?;
        let mut mean = vec![0.0; embedded[0].dim()];
        for e in &embedded {
            for (m, v) in mean.iter_mut().zip(e.values()) {
                *m += v;
            }
        }
        let n = embedded.len() as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        Ok(Embedding(mean))
    }

    /// The run's embedding dimension, probing the provider once if it is not yet known.
    pub fn dim(&self) -> Result<usize> {
        if let Some(d) = *self.dim.lock().unwrap() {
            return Ok(d);
        }
        Ok(self.embed("dimension probe")?.dim())
    }

    fn check_dim(&self, actual: usize) -> Result<()> {
        let mut dim = self.dim.lock().unwrap();
        match *dim {
            Some(expected) if expected != actual => {
                Err(Error::DimensionMismatch { expected, actual })
            }
            Some(_) => Ok(()),
            None => {
                *dim = Some(actual);
                Ok(())
            }
        }
    }
}
