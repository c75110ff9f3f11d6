use rayon::prelude::*;

use crate::dedup::PairFingerprint;
use crate::error::{Error, Result};
use crate::model::{ScoredPair, SentencePair};
use crate::similarity::{score_pairs, EmbeddingProvider, ScoreCache, ScoreOutcome};

/// Scores chunks of pairs: cache lookups first, then provider batches fanned
/// out over a worker pool and merged back in input order.
pub struct Scorer<'a> {
    provider: &'a dyn EmbeddingProvider,
    cache: Option<&'a ScoreCache>,
    pool: rayon::ThreadPool,
    jobs: usize,
}

impl<'a> Scorer<'a> {
    pub fn new(
        provider: &'a dyn EmbeddingProvider,
        cache: Option<&'a ScoreCache>,
        jobs: usize,
    ) -> Result<Self> {
        let jobs = jobs.max(1);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .thread_name(|i| format!("score-{i}"))
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
        Ok(Scorer {
            provider,
            cache,
            pool,
            jobs,
        })
    }

    pub fn provider_id(&self) -> &str {
        self.provider.provider_id()
    }

    pub fn score_chunk(&self, pairs: &[SentencePair]) -> Result<Vec<ScoreOutcome>> {
        let mut out: Vec<Option<ScoreOutcome>> = vec![None; pairs.len()];
        let mut misses: Vec<usize> = Vec::with_capacity(pairs.len());
        let keys: Option<Vec<PairFingerprint>> = self
            .cache
            .map(|_| pairs.iter().map(PairFingerprint::of_pair).collect());
        match (self.cache, &keys) {
            (Some(cache), Some(keys)) => {
                for (i, pair) in pairs.iter().enumerate() {
                    match cache.get(keys[i]) {
                        Some(s) => {
                            out[i] = Some(ScoreOutcome::Scored(ScoredPair::new(
                                pair.clone(),
                                s,
                                self.provider.provider_id(),
                            )?))
                        }
                        None => misses.push(i),
                    }
                }
            }
            _ => misses.extend(0..pairs.len()),
        }
        if misses.is_empty() {
            return Ok(out.into_iter().map(Option::unwrap).collect());
        }

        let todo: Vec<SentencePair> = misses.iter().map(|&i| pairs[i].clone()).collect();
        let per_provider_batch = (self.provider.batch_limit() / 2).max(1);
        let per_task = todo.len().div_ceil(self.jobs).clamp(1, per_provider_batch);
        let provider = self.provider;
        let scored: Vec<Vec<ScoreOutcome>> = self.pool.install(|| {
            todo.par_chunks(per_task)
                .map(|batch| score_pairs(batch, provider))
                .collect::<Result<_>>()
        })?;

        for (&i, outcome) in misses.iter().zip(scored.into_iter().flatten()) {
            if let (Some(cache), Some(keys), ScoreOutcome::Scored(sp)) =
                (self.cache, &keys, &outcome)
            {
                cache.insert(keys[i], sp.similarity())?;
            }
            out[i] = Some(outcome);
        }
        Ok(out.into_iter().map(Option::unwrap).collect())
    }
}
