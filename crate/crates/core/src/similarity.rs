//! Textual and semantic similarity.
//!
//! Text similarity is the Ratcliff–Obershelp ratio computed exactly the way
//! Python's `difflib.SequenceMatcher` does it (including the automatic
//! popular-element heuristic for sequences of 200+ elements), over Unicode
//! scalar values. Semantic similarity is the cosine of embedding vectors,
//! remapped from `[-1, 1]` to `(0, 1]`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::http::{join_url, HttpError, JsonPoster};

/// Lower clamp keeping every score inside `(0, 1]`.
pub const EPS_SIM: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SimilarityScore(f64);

impl SimilarityScore {
    pub fn new(value: f64) -> Self {
        Self(value.clamp(EPS_SIM, 1.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimilarityError {
    #[error("similarity of an empty string is undefined")]
    EmptyInput,
    #[error(transparent)]
    Provider(#[from] ProviderError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProviderError {
    #[error("embedding request failed: {0}")]
    Http(#[from] HttpError),
    #[error("provider returned {got} embeddings for {expected} inputs")]
    CountMismatch { expected: usize, got: usize },
    #[error("provider returned a zero vector")]
    ZeroVector,
    #[error("embedding dimensions differ ({0} vs {1})")]
    DimensionMismatch(usize, usize),
}

/// A validated embedding (at least one nonzero entry).
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingVector {
    values: Vec<f64>,
    norm: f64,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Result<Self, ProviderError> {
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(ProviderError::ZeroVector);
        }
        Ok(Self { values, norm })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn cosine(&self, other: &Self) -> Result<f64, ProviderError> {
        if self.values.len() != other.values.len() {
            return Err(ProviderError::DimensionMismatch(self.values.len(), other.values.len()));
        }
        let dot: f64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum();
        Ok((dot / (self.norm * other.norm)).clamp(-1.0, 1.0))
    }
}

/// Source of text embeddings. Implementations must tolerate concurrent calls.
pub trait EmbeddingProvider: Send + Sync {
    fn embed(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, ProviderError>;
}

/// Deterministic offline embedder: identifiers are split into letter and
/// digit runs (so `forward_velocity` contributes `forward` and `velocity`),
/// and each run is hashed into a signed count over a fixed number of buckets.
#[derive(Clone, Debug)]
pub struct HashEmbedder {
    dim: usize,
}

impl HashEmbedder {
    pub const DEFAULT_DIM: usize = 256;

    pub fn new(dim: usize) -> Self {
        Self { dim: dim.max(1) }
    }

    fn fnv1a(bytes: &[u8]) -> u64 {
        bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3))
    }

    fn tokens(text: &str) -> impl Iterator<Item = &str> {
        let mut rest = text;
        std::iter::from_fn(move || {
            let start = rest.find(|c: char| c.is_ascii_alphanumeric())?;
            rest = &rest[start..];
            let alpha = rest.as_bytes()[0].is_ascii_alphabetic();
            let end = rest.find(|c: char| if alpha { !c.is_ascii_alphabetic() } else { !c.is_ascii_digit() }).unwrap_or(rest.len());
            let (tok, tail) = rest.split_at(end);
            rest = tail;
            Some(tok)
        })
    }

    pub fn embed_one(&self, text: &str) -> Result<EmbeddingVector, ProviderError> {
        let mut v = vec![0.0; self.dim];
        for token in Self::tokens(text) {
            let h = Self::fnv1a(token.to_ascii_lowercase().as_bytes());
            let sign = if (h >> 32) & 1 == 0 { 1.0 } else { -1.0 };
            v[(h % self.dim as u64) as usize] += sign;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        EmbeddingVector::new(v)
    }
}

impl Default for HashEmbedder {
    fn default() -> Self {
        Self::new(Self::DEFAULT_DIM)
    }
}

impl EmbeddingProvider for HashEmbedder {
    fn embed(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, ProviderError> {
        texts.iter().map(|t| self.embed_one(t)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HttpEmbedderConfig {
    pub base_url: String,
    pub model: String,
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default = "default_timeout")]
    pub timeout_s: f64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
}

fn default_timeout() -> f64 {
    60.0
}

fn default_retries() -> u32 {
    3
}

/// OpenAI-compatible `/embeddings` client.
pub struct HttpEmbedder {
    url: String,
    model: String,
    poster: JsonPoster,
}

impl HttpEmbedder {
    pub fn new(config: &HttpEmbedderConfig) -> Result<Self, ProviderError> {
        Ok(Self {
            url: join_url(&config.base_url, "embeddings"),
            model: config.model.clone(),
            poster: JsonPoster::new(config.timeout_s, config.api_key_env.as_deref(), config.max_retries)?,
        })
    }
}

impl EmbeddingProvider for HttpEmbedder {
    fn embed(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, ProviderError> {
        let body = json!({ "input": texts, "model": self.model });
        let resp = self.poster.post(&self.url, &body)?;
        let data = resp
            .get("data")
            .and_then(|d| d.as_array())
            .ok_or_else(|| HttpError::Decode("missing `data` array".into()))?;
        if data.len() != texts.len() {
            return Err(ProviderError::CountMismatch { expected: texts.len(), got: data.len() });
        }
        data.iter()
            .map(|item| {
                let values = item
                    .get("embedding")
                    .and_then(|e| e.as_array())
                    .ok_or_else(|| HttpError::Decode("missing `embedding`".into()))?
                    .iter()
                    .map(|v| v.as_f64().ok_or_else(|| HttpError::Decode("non-numeric embedding entry".into())))
                    .collect::<Result<Vec<_>, _>>()?;
                EmbeddingVector::new(values)
            })
            .collect()
    }
}

struct SequenceMatcher<'a> {
    a: &'a [char],
    b: &'a [char],
    b2j: HashMap<char, Vec<usize>>,
}

impl<'a> SequenceMatcher<'a> {
    fn new(a: &'a [char], b: &'a [char]) -> Self {
        let mut b2j: HashMap<char, Vec<usize>> = HashMap::new();
        for (j, &c) in b.iter().enumerate() {
            b2j.entry(c).or_default().push(j);
        }
        let n = b.len();
        if n >= 200 {
            let ntest = n / 100 + 1;
            b2j.retain(|_, idxs| idxs.len() <= ntest);
        }
        Self { a, b, b2j }
    }

    /// Longest matching block in `a[alo..ahi]` / `b[blo..bhi]`; earliest in
    /// `a`, then earliest in `b`, among maximal blocks.
    fn find_longest_match(&self, alo: usize, ahi: usize, blo: usize, bhi: usize, lens: &mut MatchBuffers) -> (usize, usize, usize) {
        let (a, b) = (self.a, self.b);
        let (mut besti, mut bestj, mut bestsize) = (alo, blo, 0usize);
        lens.clear();
        for i in alo..ahi {
            if let Some(js) = self.b2j.get(&a[i]) {
                for &j in js {
                    if j < blo {
                        continue;
                    }
                    if j >= bhi {
                        break;
                    }
                    let k = if j > 0 { lens.prev(j - 1) } else { 0 } + 1;
                    lens.set_next(j, k);
                    if k > bestsize {
                        besti = i + 1 - k;
                        bestj = j + 1 - k;
                        bestsize = k;
                    }
                }
            }
            lens.advance();
        }
        // No element is junk (no junk predicate), so extend over equal
        // neighbours, which may include popular elements.
        while besti > alo && bestj > blo && a[besti - 1] == b[bestj - 1] {
            besti -= 1;
            bestj -= 1;
            bestsize += 1;
        }
        while besti + bestsize < ahi && bestj + bestsize < bhi && a[besti + bestsize] == b[bestj + bestsize] {
            bestsize += 1;
        }
        (besti, bestj, bestsize)
    }

    fn matched_total(&self) -> usize {
        let mut lens = MatchBuffers::new(self.b.len());
        let mut queue = vec![(0, self.a.len(), 0, self.b.len())];
        let mut total = 0;
        while let Some((alo, ahi, blo, bhi)) = queue.pop() {
            let (i, j, k) = self.find_longest_match(alo, ahi, blo, bhi, &mut lens);
            if k > 0 {
                total += k;
                if alo < i && blo < j {
                    queue.push((alo, i, blo, j));
                }
                if i + k < ahi && j + k < bhi {
                    queue.push((i + k, ahi, j + k, bhi));
                }
            }
        }
        total
    }
}

/// Sparse-reset double buffer standing in for difflib's per-row `j2len` dicts.
struct MatchBuffers {
    prev: Vec<usize>,
    next: Vec<usize>,
    prev_touched: Vec<usize>,
    next_touched: Vec<usize>,
}

impl MatchBuffers {
    fn new(n: usize) -> Self {
        Self { prev: vec![0; n], next: vec![0; n], prev_touched: Vec::new(), next_touched: Vec::new() }
    }

    fn prev(&self, j: usize) -> usize {
        self.prev[j]
    }

    fn set_next(&mut self, j: usize, k: usize) {
        self.next[j] = k;
        self.next_touched.push(j);
    }

    fn advance(&mut self) {
        for &j in &self.prev_touched {
            self.prev[j] = 0;
        }
        self.prev_touched.clear();
        std::mem::swap(&mut self.prev, &mut self.next);
        std::mem::swap(&mut self.prev_touched, &mut self.next_touched);
    }

    fn clear(&mut self) {
        for &j in &self.prev_touched {
            self.prev[j] = 0;
        }
        for &j in &self.next_touched {
            self.next[j] = 0;
        }
        self.prev_touched.clear();
        self.next_touched.clear();
    }
}

/// Ratcliff–Obershelp ratio `2·M / (|a| + |b|)`, clamped below at [`EPS_SIM`].
pub fn text_similarity(a: &str, b: &str) -> Result<SimilarityScore, SimilarityError> {
    if a.is_empty() || b.is_empty() {
        return Err(SimilarityError::EmptyInput);
    }
    if a == b {
        return Ok(SimilarityScore::new(1.0));
    }
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let m = SequenceMatcher::new(&a, &b).matched_total();
    Ok(SimilarityScore::new(2.0 * m as f64 / (a.len() + b.len()) as f64))
}

fn remap_cosine(cos: f64) -> SimilarityScore {
    SimilarityScore::new(((cos + 1.0) / 2.0).max(EPS_SIM))
}

pub fn semantic_similarity(a: &str, b: &str, provider: &dyn EmbeddingProvider) -> Result<SimilarityScore, SimilarityError> {
    if a.is_empty() || b.is_empty() {
        return Err(SimilarityError::EmptyInput);
    }
    if a == b {
        return Ok(SimilarityScore::new(1.0));
    }
    let v = provider.embed(&[a, b])?;
    if v.len() != 2 {
        return Err(ProviderError::CountMismatch { expected: 2, got: v.len() }.into());
    }
    Ok(remap_cosine(v[0].cosine(&v[1])?))
}

pub fn combined_similarity(a: &str, b: &str, provider: &dyn EmbeddingProvider) -> Result<SimilarityScore, SimilarityError> {
    let t = text_similarity(a, b)?;
    let s = semantic_similarity(a, b, provider)?;
    Ok(if t.value() >= s.value() { t } else { s })
}

/// Text, semantic and combined (max) similarity of one ordered pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairSimilarity {
    pub text: f64,
    pub semantic: f64,
    pub combined: f64,
}

/// Similarity evaluation with in-run embedding memoization.
pub struct SimilarityEngine {
    provider: Arc<dyn EmbeddingProvider>,
    cache: Mutex<HashMap<String, Arc<EmbeddingVector>>>,
}

impl SimilarityEngine {
    pub fn new(provider: Arc<dyn EmbeddingProvider>) -> Self {
        Self { provider, cache: Mutex::new(HashMap::new()) }
    }

    /// Engine backed by the deterministic [`HashEmbedder`].
    pub fn offline() -> Self {
        Self::new(Arc::new(HashEmbedder::default()))
    }

    /// Embeds every uncached text in one batched provider call.
    pub fn prefetch(&self, texts: &[&str]) -> Result<(), ProviderError> {
        let missing: Vec<&str> = {
            let cache = self.cache.lock().expect("embedding cache poisoned");
            let mut seen = std::collections::HashSet::new();
            texts.iter().copied().filter(|t| !t.is_empty() && !cache.contains_key(*t) && seen.insert(*t)).collect()
        };
        if missing.is_empty() {
            return Ok(());
        }
        let vectors = self.provider.embed(&missing)?;
        if vectors.len() != missing.len() {
            return Err(ProviderError::CountMismatch { expected: missing.len(), got: vectors.len() });
        }
        let mut cache = self.cache.lock().expect("embedding cache poisoned");
        for (t, v) in missing.into_iter().zip(vectors) {
            cache.insert(t.to_string(), Arc::new(v));
        }
        Ok(())
    }

    fn embedding(&self, text: &str) -> Result<Arc<EmbeddingVector>, ProviderError> {
        if let Some(v) = self.cache.lock().expect("embedding cache poisoned").get(text) {
            return Ok(v.clone());
        }
        self.prefetch(&[text])?;
        Ok(self.cache.lock().expect("embedding cache poisoned")[text].clone())
    }

    pub fn text(&self, a: &str, b: &str) -> Result<SimilarityScore, SimilarityError> {
        text_similarity(a, b)
    }

    pub fn semantic(&self, a: &str, b: &str) -> Result<SimilarityScore, SimilarityError> {
        if a.is_empty() || b.is_empty() {
            return Err(SimilarityError::EmptyInput);
        }
        if a == b {
            return Ok(SimilarityScore::new(1.0));
        }
        let (va, vb) = (self.embedding(a)?, self.embedding(b)?);
        Ok(remap_cosine(va.cosine(&vb)?))
    }

    pub fn pair(&self, a: &str, b: &str) -> Result<PairSimilarity, SimilarityError> {
        let text = self.text(a, b)?.value();
        let semantic = self.semantic(a, b)?.value();
        Ok(PairSimilarity { text, semantic, combined: text.max(semantic) })
    }

    pub fn combined(&self, a: &str, b: &str) -> Result<SimilarityScore, SimilarityError> {
        Ok(SimilarityScore::new(self.pair(a, b)?.combined))
    }
}
