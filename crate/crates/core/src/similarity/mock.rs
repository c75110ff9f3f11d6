use xxhash_rust::xxh3::xxh3_64_with_seed;

use super::{Embedding, EmbeddingProvider};
use crate::error::Result;

pub const MOCK_DIM: usize = 256;

/// Seed for hashing n-grams into buckets. Part of the mock provider's
/// contract: changing it changes every mock score.
pub const MOCK_SEED: u64 = 0x6269_7465_7874;

/// Hashed character-trigram count vector, L2-normalized.
///
/// Texts shorter than three characters use their 1- and 2-grams instead.
/// The empty string maps to the zero vector.
pub fn mock_embed(text: &str, dim: usize) -> Embedding {
    assert!(dim > 0, "mock dimension must be positive");
    let chars: Vec<char> = text.chars().collect();
    let mut counts = vec![0f32; dim];
    let mut buf = [0u8; 12];
    let mut bump = |gram: &[char]| {
        let mut len = 0;
        for c in gram {
            len += c.encode_utf8(&mut buf[len..]).len();
        }
        let bucket = (xxh3_64_with_seed(&buf[..len], MOCK_SEED) % dim as u64) as usize;
        counts[bucket] += 1.0;
    };
    if chars.len() >= 3 {
        chars.windows(3).for_each(&mut bump);
    } else {
        chars.windows(1).for_each(&mut bump);
        chars.windows(2).for_each(&mut bump);
    }
    let norm = counts.iter().map(|c| c * c).sum::<f32>().sqrt();
    if norm > 0.0 {
        counts.iter_mut().for_each(|c| *c /= norm);
    }
    Embedding::new(counts).expect("counts are finite and dim > 0")
}

/// Deterministic in-process provider built on [`mock_embed`].
#[derive(Debug, Clone)]
pub struct MockProvider {
    dim: usize,
    batch_limit: usize,
    id: String,
}

impl MockProvider {
    pub fn new(dim: usize, batch_limit: usize) -> Self {
        MockProvider {
            dim,
            batch_limit,
            id: format!("mock-trigram-v1/d{dim}"),
        }
    }
}

impl Default for MockProvider {
    fn default() -> Self {
        MockProvider::new(MOCK_DIM, 1024)
    }
}

impl EmbeddingProvider for MockProvider {
    fn provider_id(&self) -> &str {
        &self.id
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn batch_limit(&self) -> usize {
        self.batch_limit
    }

    fn embed(&self, texts: &[&str]) -> Result<Vec<Embedding>> {
        Ok(texts.iter().map(|t| mock_embed(t, self.dim)).collect())
    }
}
