//! Exact-duplicate removal over normalized (source, target) pairs.
//!
//! Two pairs are duplicates only when both sides match after normalization;
//! pairs that share one side but differ on the other are all kept. The first
//! occurrence wins and the original text is emitted untouched.

use std::collections::HashSet;

use xxhash_rust::xxh3::Xxh3;

use crate::ingest::normalize_cow;
use crate::model::SentencePair;

const SIDE_SEPARATOR: u8 = 0x1F;

/// 128-bit digest of `normalize(src) 0x1F normalize(tgt)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PairFingerprint(pub u128);

impl PairFingerprint {
    pub fn of(source_text: &str, target_text: &str) -> Self {
        let mut h = Xxh3::new();
        h.update(normalize_cow(source_text).as_bytes());
        h.update(&[SIDE_SEPARATOR]);
        h.update(normalize_cow(target_text).as_bytes());
        PairFingerprint(h.digest128())
    }

    pub fn of_pair(pair: &SentencePair) -> Self {
        Self::of(&pair.source_text, &pair.target_text)
    }

    pub fn to_hex(self) -> String {
        format!("{:032x}", self.0)
    }
}

/// Seen-set for streaming dedup.
#[derive(Debug, Default)]
pub struct Deduplicator {
    seen: HashSet<u128>,
    removed: u64,
}

impl Deduplicator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns true if the pair is the first with its fingerprint.
    pub fn admit(&mut self, pair: &SentencePair) -> bool {
        let fresh = self.seen.insert(PairFingerprint::of_pair(pair).0);
        if !fresh {
            self.removed += 1;
        }
        fresh
    }

    pub fn removed(&self) -> u64 {
        self.removed
    }

    pub fn distinct(&self) -> usize {
        self.seen.len()
    }
}

/// Removes exact duplicates, keeping first occurrences in input order.
/// Returns the kept pairs and the number removed.
pub fn dedup_exact<I>(pairs: I) -> (Vec<SentencePair>, u64)
where
    I: IntoIterator<Item = SentencePair>,
{
    let mut d = Deduplicator::new();
    let kept = pairs.into_iter().filter(|p| d.admit(p)).collect();
    (kept, d.removed())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::normalize;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn p(id: &str, s: &str, t: &str) -> SentencePair {
        SentencePair::new(id, s, t)
    }

    /// Set-membership dedup on normalized strings, no hashing.
    fn brute_force(pairs: &[SentencePair]) -> Vec<SentencePair> {
        let mut seen: BTreeSet<(String, String)> = BTreeSet::new();
        let mut out = Vec::new();
        for pair in pairs {
            let key = (normalize(&pair.source_text), normalize(&pair.target_text));
            if !seen.contains(&key) {
                seen.insert(key);
                out.push(pair.clone());
            }
        }
        out
    }

    #[test]
    fn exact_duplicate_removed_other_translation_kept() {
        let input = vec![p("1", "s1", "t1"), p("2", "s1", "t1"), p("3", "s1", "t2")];
        let (kept, removed) = dedup_exact(input);
        assert_eq!(removed, 1);
        let ids: Vec<_> = kept.iter().map(|p| p.id.as_str()).collect();
        assert_eq!(ids, ["1", "3"]);
    }

    #[test]
    fn same_target_different_source_kept() {
        let (kept, removed) = dedup_exact(vec![p("1", "s1", "t1"), p("2", "s2", "t1")]);
        assert_eq!(removed, 0);
        assert_eq!(kept.len(), 2);
    }

    #[test]
    fn whitespace_variants_collapse() {
        let input = vec![p("1", "a  b", "t1"), p("2", "a b", "t1")];
        let oracle = brute_force(&input);
        let (kept, removed) = dedup_exact(input);
        assert_eq!(removed, 1);
        assert_eq!(kept, oracle);
        // original text of the first occurrence is emitted
        assert_eq!(kept[0].source_text, "a  b");
    }

    #[test]
    fn separator_prevents_boundary_collisions() {
        assert_ne!(
            PairFingerprint::of("ab", "c"),
            PairFingerprint::of("a", "bc")
        );
    }

    #[test]
    fn fingerprint_is_stable() {
        // frozen so a change of hashing scheme is noticed
        assert_eq!(
            PairFingerprint::of("Hello", "नमस्कार").to_hex(),
            PairFingerprint::of(" Hello ", "नमस्कार").to_hex()
        );
        assert_eq!(
            PairFingerprint::of(" Hello ", "नमस्कार").to_hex(),
            "1c35bd0186bdf698954d5819cf74d8a3"
        );
        assert_eq!(
            PairFingerprint::of("a", "b").to_hex(),
            "d565f29ad8964a7cd671f8867f47bbb9"
        );
    }

    fn arb_corpus() -> impl Strategy<Value = Vec<SentencePair>> {
        let text = prop_oneof![
            Just("a".to_string()),
            Just("a ".to_string()),
            Just("a  b".to_string()),
            Just("a b".to_string()),
            Just("e\u{0301}".to_string()),
            Just("\u{00e9}".to_string()),
            "[abc]{1,3}",
        ];
        prop::collection::vec((text.clone(), text), 0..60).prop_map(|v| {
            v.into_iter()
                .enumerate()
                .map(|(i, (s, t))| p(&i.to_string(), &s, &t))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn matches_brute_force_and_is_idempotent(corpus in arb_corpus()) {
            let oracle = brute_force(&corpus);
            let (once, removed) = dedup_exact(corpus.clone());
            prop_assert_eq!(&once, &oracle);
            prop_assert_eq!(removed as usize, corpus.len() - once.len());
            let (twice, removed2) = dedup_exact(once.clone());
            prop_assert_eq!(twice, once.clone());
            prop_assert_eq!(removed2, 0);
            // order preserved: ids strictly increase
            let ids: Vec<usize> = once.iter().map(|p| p.id.parse().unwrap()).collect();
            prop_assert!(ids.windows(2).all(|w| w[0] < w[1]));
        }
    }
}
