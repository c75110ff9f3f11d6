//! Embedding providers, cosine similarity, pair scoring and threshold filtering.

mod cache;
mod mock;
mod remote;

pub use cache::ScoreCache;
pub use mock::{mock_embed, MockProvider, MOCK_DIM, MOCK_SEED};
pub use remote::{RemoteProvider, RetryPolicy};

use crate::error::{Error, Result};
use crate::ingest::normalize_cow;
use crate::model::{clamp_similarity, ScoredPair, SentencePair, SimilarityThreshold};

/// A fixed-dimension vector with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    values: Vec<f32>,
}

impl Embedding {
    pub fn new(values: Vec<f32>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidEmbedding("zero-dimensional".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidEmbedding(format!("non-finite entry at {i}")));
        }
        Ok(Embedding { values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn scaled(&self, k: f32) -> Result<Self> {
        Embedding::new(self.values.iter().map(|v| v * k).collect())
    }
}

/// Maps text to embeddings. Implementations must be deterministic within a
/// run and return one embedding per input text, in order.
pub trait EmbeddingProvider: Send + Sync {
    /// Provider name plus model version; recorded as the scorer id.
    fn provider_id(&self) -> &str;
    fn dim(&self) -> usize;
    fn batch_limit(&self) -> usize;
    /// Raw call. Callers go through [`embed_batch`], which enforces the
    /// batch limit and checks the response shape.
    fn embed(&self, texts: &[&str]) -> Result<Vec<Embedding>>;
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for Box<P> {
    fn provider_id(&self) -> &str {
        (**self).provider_id()
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn batch_limit(&self) -> usize {
        (**self).batch_limit()
    }
    fn embed(&self, texts: &[&str]) -> Result<Vec<Embedding>> {
        (**self).embed(texts)
    }
}

pub fn embed_batch<P: EmbeddingProvider + ?Sized>(
    texts: &[&str],
    provider: &P,
) -> Result<Vec<Embedding>> {
    if texts.len() > provider.batch_limit() {
        return Err(Error::BatchTooLarge {
            len: texts.len(),
            limit: provider.batch_limit(),
        });
    }
    if texts.is_empty() {
        return Ok(Vec::new());
    }
    let out = provider.embed(texts)?;
    if out.len() != texts.len() {
        return Err(Error::Provider(format!(
            "{} embeddings returned for {} texts",
            out.len(),
            texts.len()
        )));
    }
    if let Some(bad) = out.iter().find(|e| e.dim() != provider.dim()) {
        return Err(Error::DimensionMismatch {
            expected: provider.dim(),
            actual: bad.dim(),
        });
    }
    Ok(out)
}

/// `dot(a, b) / (|a| |b|)`, clamped to `[-1, 1]`.
pub fn cosine(a: &Embedding, b: &Embedding) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            actual: b.dim(),
        });
    }
    let (mut dot, mut na, mut nb) = (0.0f64, 0.0f64, 0.0f64);
    for (&x, &y) in a.values.iter().zip(&b.values) {
        let (x, y) = (x as f64, y as f64);
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(Error::UndefinedSimilarity);
    }
    // sqrt(na * nb) rather than sqrt(na) * sqrt(nb): identical vectors give exactly 1.
    Ok((dot / (na * nb).sqrt()).clamp(-1.0, 1.0))
}

/// Result of scoring one pair. Pair-level failures (for example an empty
/// embedding) are carried as `Unscored` so callers can route them to a sidecar.
#[derive(Debug, Clone, PartialEq)]
pub enum ScoreOutcome {
    Scored(ScoredPair),
    Unscored { pair: SentencePair, reason: String },
}

fn similarity_of(src: &Embedding, tgt: &Embedding) -> Result<f64> {
    clamp_similarity(cosine(src, tgt)?)
}

pub fn score_pair<P: EmbeddingProvider + ?Sized>(
    pair: &SentencePair,
    provider: &P,
) -> Result<ScoredPair> {
    let src = normalize_cow(&pair.source_text);
    let tgt = normalize_cow(&pair.target_text);
    let embs = if provider.batch_limit() >= 2 {
        embed_batch(&[&src, &tgt], provider)?
    } else {
        let mut v = embed_batch(&[&src], provider)?;
        v.extend(embed_batch(&[&tgt], provider)?);
        v
    };
    let sim = similarity_of(&embs[0], &embs[1])?;
    ScoredPair::new(pair.clone(), sim, provider.provider_id())
}

/// Scores pairs in provider-sized batches, preserving order. Provider-level
/// failures abort with an error; pair-level failures become `Unscored`.
pub fn score_pairs<P: EmbeddingProvider + ?Sized>(
    pairs: &[SentencePair],
    provider: &P,
) -> Result<Vec<ScoreOutcome>> {
    let per_batch = (provider.batch_limit() / 2).max(1);
    let mut out = Vec::with_capacity(pairs.len());
    for chunk in pairs.chunks(per_batch) {
        let texts: Vec<std::borrow::Cow<'_, str>> = chunk
            .iter()
            .flat_map(|p| [normalize_cow(&p.source_text), normalize_cow(&p.target_text)])
            .collect();
        let refs: Vec<&str> = texts.iter().map(|t| t.as_ref()).collect();
        let embs = if refs.len() <= provider.batch_limit() {
            embed_batch(&refs, provider)?
        } else {
            let mut v = Vec::with_capacity(refs.len());
            for t in &refs {
                v.extend(embed_batch(std::slice::from_ref(t), provider)?);
            }
            v
        };
        for (pair, e) in chunk.iter().zip(embs.chunks(2)) {
            let outcome = match similarity_of(&e[0], &e[1])
                .and_then(|s| ScoredPair::new(pair.clone(), s, provider.provider_id()))
            {
                Ok(sp) => ScoreOutcome::Scored(sp),
                Err(err) => ScoreOutcome::Unscored {
                    pair: pair.clone(),
                    reason: err.to_string(),
                },
            };
            out.push(outcome);
        }
    }
    Ok(out)
}

/// Splits scored pairs into kept (`similarity >= tau`) and rejected, both in
/// input order.
pub fn filter_by_threshold<I>(
    pairs: I,
    tau: SimilarityThreshold,
) -> (Vec<ScoredPair>, Vec<ScoredPair>)
where
    I: IntoIterator<Item = ScoredPair>,
{
    pairs.into_iter().partition(|p| tau.keeps(p.similarity()))
}
