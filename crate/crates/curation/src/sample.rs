use std::collections::HashSet;
use std::path::Path;

use bitext_core::ingest::{open_corpus, CorpusFormat, CorpusWriter};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{CurationError, Result};
use crate::state::QueueItem;

/// Draws `n` pairs uniformly without replacement (reservoir sampling, then a
/// shuffle so queue order is random too) and writes them to `queue_path`.
/// The same corpus and seed always give the same queue.
pub fn sample_candidates(
    corpus: &Path,
    format: CorpusFormat,
    n: u64,
    seed: u64,
    queue_path: &Path,
) -> Result<Vec<QueueItem>> {
    if n == 0 {
        return Err(CurationError::Invalid(
            "sample size must be positive".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut reservoir: Vec<QueueItem> = Vec::with_capacity(n.min(1 << 20) as usize);
    let mut seen = 0u64;
    for rec in open_corpus(corpus, format)? {
        let rec = rec?;
        let item = QueueItem {
            pair: rec.pair,
            score: rec.score,
        };
        if seen < n {
            reservoir.push(item);
        } else {
            let j = rng.gen_range(0..=seen);
            if j < n {
                reservoir[j as usize] = item;
            }
        }
        seen += 1;
    }
    if seen < n {
        return Err(CurationError::SampleTooLarge {
            requested: n,
            available: seen,
        });
    }
    reservoir.shuffle(&mut rng);
    let mut ids = HashSet::with_capacity(reservoir.len());
    if let Some(dup) = reservoir.iter().find(|it| !ids.insert(it.pair.id.as_str())) {
        return Err(CurationError::DuplicateId(dup.pair.id.clone()));
    }
    write_queue(queue_path, &reservoir)?;
    Ok(reservoir)
}

pub fn write_queue(path: &Path, items: &[QueueItem]) -> Result<()> {
    let mut w = CorpusWriter::create(path, CorpusFormat::Jsonl)?;
    for it in items {
        w.write_record(&it.pair, it.score, None)?;
    }
    w.finish()?;
    Ok(())
}

/// Loads a queue file written by [`sample_candidates`]. Unlike corpus input,
/// a malformed line here is an error.
pub fn load_queue(path: &Path) -> Result<Vec<QueueItem>> {
    let mut reader = open_corpus(path, CorpusFormat::Jsonl)?;
    let items = reader
        .by_ref()
        .map(|r| {
            r.map(|rec| QueueItem {
                pair: rec.pair,
                score: rec.score,
            })
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if reader.skipped() > 0 {
        return Err(CurationError::Invalid(format!(
            "{}: {} malformed queue records",
            path.display(),
            reader.skipped()
        )));
    }
    Ok(items)
}
