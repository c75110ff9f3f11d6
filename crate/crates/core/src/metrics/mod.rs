//! Corpus evaluation: BLEU, exact-match METEOR, chrF, chrF++ and an
//! embedding-similarity score, all on a 0-100 scale.
//!
//! Texts are normalized on entry; word-level metrics split on Unicode
//! whitespace with no punctuation splitting and no case folding.

mod bleu;
mod chrf;
mod meteor;

pub use bleu::{bleu_corpus, bleu_stats, BleuStats, Smoothing};
pub use chrf::{chrf, chrf_pp, ChrfStats};
pub use meteor::{align_greedy, count_chunks, meteor_segment, meteor_simple, MeteorParams};

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::normalize;
use crate::model::SentencePair;
use crate::similarity::{score_pairs, EmbeddingProvider, ScoreOutcome};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalItem {
    pub hypothesis: String,
    pub reference: String,
}

impl EvalItem {
    pub fn new(hypothesis: impl AsRef<str>, reference: impl AsRef<str>) -> Self {
        EvalItem {
            hypothesis: normalize(hypothesis.as_ref()),
            reference: normalize(reference.as_ref()),
        }
    }
}

/// Non-empty list of aligned hypothesis/reference pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalSet {
    name: String,
    items: Vec<EvalItem>,
}

#[derive(Deserialize)]
struct EvalLine {
    #[serde(default)]
    hyp: Option<String>,
    #[serde(default, rename = "ref")]
    reference: Option<String>,
    #[serde(default)]
    tgt: Option<String>,
}

impl EvalSet {
    pub fn new(name: impl Into<String>, items: Vec<EvalItem>) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::EmptyEvalSet);
        }
        Ok(EvalSet {
            name: name.into(),
            items,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn items(&self) -> &[EvalItem] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Loads a JSONL evaluation file. The reference is `"ref"`, falling back to
    /// `"tgt"` (so exported gold sets load directly); the hypothesis is `"hyp"`
    /// unless `hypotheses` supplies one line per record.
    pub fn from_jsonl(path: &Path, hypotheses: Option<Vec<String>>) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut items = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: EvalLine = serde_json::from_str(&line)
                .map_err(|e| Error::Malformed(format!("{}:{}: {e}", path.display(), i + 1)))?;
            let reference = rec.reference.or(rec.tgt).ok_or_else(|| {
                Error::Malformed(format!(
                    "{}:{}: no \"ref\" or \"tgt\"",
                    path.display(),
                    i + 1
                ))
            })?;
            let hyp = match &hypotheses {
                Some(h) => h.get(items.len()).cloned(),
                None => rec.hyp,
            }
            .ok_or_else(|| {
                Error::Malformed(format!("{}:{}: missing hypothesis", path.display(), i + 1))
            })?;
            items.push(EvalItem::new(hyp, reference));
        }
        if let Some(h) = &hypotheses {
            if h.len() != items.len() {
                return Err(Error::Malformed(format!(
                    "{} hypotheses for {} references",
                    h.len(),
                    items.len()
                )));
            }
        }
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        EvalSet::new(name, items)
    }
}

/// Mean clamped cosine between hypothesis and reference embeddings, x100.
pub fn sbert_score<P: EmbeddingProvider + ?Sized>(set: &EvalSet, provider: &P) -> Result<f64> {
    let pairs: Vec<SentencePair> = set
        .items()
        .iter()
        .enumerate()
        .map(|(i, it)| SentencePair::new(i.to_string(), &it.hypothesis, &it.reference))
        .collect();
    let mut total = 0.0;
    for outcome in score_pairs(&pairs, provider)? {
        match outcome {
            ScoreOutcome::Scored(s) => total += s.similarity(),
            ScoreOutcome::Unscored { pair, reason } => {
                warn!("embedding score: item {} counted as 0 ({reason})", pair.id);
            }
        }
    }
    Ok(100.0 * total / set.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub bleu: f64,
    pub meteor: f64,
    pub chrf: f64,
    pub chrf_pp: f64,
    pub sbert_score: f64,
    pub n_items: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EvalOptions {
    pub smoothing: Smoothing,
    pub meteor: MeteorParams,
}

pub fn evaluate<P: EmbeddingProvider + ?Sized>(
    set: &EvalSet,
    provider: &P,
) -> Result<MetricReport> {
    evaluate_with(set, provider, EvalOptions::default())
}

pub fn evaluate_with<P: EmbeddingProvider + ?Sized>(
    set: &EvalSet,
    provider: &P,
    opts: EvalOptions,
) -> Result<MetricReport> {
    let sbert = sbert_score(set, provider).map_err(|e| Error::Metric {
        metric: "sbert_score",
        source: Box::new(e),
    })?;
    Ok(MetricReport {
        bleu: bleu_corpus(set, 4, opts.smoothing),
        meteor: meteor_simple(set, opts.meteor),
        chrf: chrf(set, 6, 2.0, 0),
        chrf_pp: chrf_pp(set),
        sbert_score: sbert,
        n_items: set.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::similarity::{Embedding, MockProvider};
    use proptest::prelude::*;

    #[test]
    fn empty_set_is_an_error() {
        let err = EvalSet::new("x", vec![]).unwrap_err();
        assert_eq!(err.to_string(), "empty evaluation set");
    }

    #[test]
    fn identical_set_report() {
        let items = vec![
            EvalItem::new("the cat sat on the mat", "the cat sat on the mat"),
            EvalItem::new("मी घरी जात आहे", "मी घरी जात आहे"),
        ];
        let set = EvalSet::new("same", items).unwrap();
        let r = evaluate(&set, &MockProvider::default()).unwrap();
        assert_eq!(r.bleu, 100.0);
        assert_eq!(r.chrf, 100.0);
        assert_eq!(r.chrf_pp, 100.0);
        assert_eq!(r.sbert_score, 100.0);
        let expected = 100.0 * ((1.0 - 0.5 / 216.0) + (1.0 - 0.5 / 64.0)) / 2.0;
        assert!((r.meteor - expected).abs() < 1e-9);
        assert_eq!(r.n_items, 2);
        let json = serde_json::to_value(&r).unwrap();
        for k in [
            "bleu",
            "meteor",
            "chrf",
            "chrf_pp",
            "sbert_score",
            "n_items",
        ] {
            assert!(json.get(k).is_some(), "{k}");
        }
    }

    struct Canned;
    impl EmbeddingProvider for Canned {
        fn provider_id(&self) -> &str {
            "canned"
        }
        fn dim(&self) -> usize {
            2
        }
        fn batch_limit(&self) -> usize {
            16
        }
        fn embed(&self, texts: &[&str]) -> Result<Vec<Embedding>> {
            // "r" = (1, 0); "h4" has cosine 0.4 with it, "h8" has 0.8
            texts
                .iter()
                .map(|t| {
                    let c: f32 = match *t {
                        "h4" => 0.4,
                        "h8" => 0.8,
                        _ => 1.0,
                    };
                    Embedding::new(vec![c, (1.0 - c * c).sqrt()])
                })
                .collect()
        }
    }

    #[test]
    fn sbert_mean_of_two() {
        let set = EvalSet::new(
            "s",
            vec![EvalItem::new("h4", "r"), EvalItem::new("h8", "r")],
        )
        .unwrap();
        let s = sbert_score(&set, &Canned).unwrap();
        assert!((s - 60.0).abs() < 1e-5, "{s}");
    }

    #[test]
    fn provider_failure_names_the_metric() {
        struct Down;
        impl EmbeddingProvider for Down {
            fn provider_id(&self) -> &str {
                "down"
            }
            fn dim(&self) -> usize {
                2
            }
            fn batch_limit(&self) -> usize {
                8
            }
            fn embed(&self, _: &[&str]) -> Result<Vec<Embedding>> {
                Err(Error::ProviderUnavailable {
                    attempts: 4,
                    message: "refused".into(),
                })
            }
        }
        let set = EvalSet::new("s", vec![EvalItem::new("a", "a")]).unwrap();
        let err = evaluate(&set, &Down).unwrap_err();
        assert!(err.to_string().contains("sbert_score"), "{err}");
    }

    #[test]
    fn loads_jsonl_with_ref_or_tgt() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gold.jsonl");
        std::fs::write(
            &path,
            "{\"hyp\":\"a  b\",\"ref\":\"a b\"}\n{\"id\":\"x\",\"src\":\"s\",\"tgt\":\"c\",\"hyp\":\"c\"}\n",
        )
        .unwrap();
        let set = EvalSet::from_jsonl(&path, None).unwrap();
        assert_eq!(set.items()[0], EvalItem::new("a b", "a b"));
        assert_eq!(set.items()[1].reference, "c");

        let set = EvalSet::from_jsonl(&path, Some(vec!["x".into(), "y".into()])).unwrap();
        assert_eq!(set.items()[1].hypothesis, "y");
        assert!(EvalSet::from_jsonl(&path, Some(vec!["x".into()])).is_err());

        let empty = dir.path().join("empty.jsonl");
        std::fs::write(&empty, "").unwrap();
        assert!(matches!(
            EvalSet::from_jsonl(&empty, None),
            Err(Error::EmptyEvalSet)
        ));
    }

    fn arb_set() -> impl Strategy<Value = Vec<(String, String)>> {
        let sent = prop::collection::vec("[a-d]{1,3}", 0..8).prop_map(|w| w.join(" "));
        prop::collection::vec((sent.clone(), sent), 1..12)
    }

    proptest! {
        #[test]
        fn metrics_in_range_and_permutation_invariant(
            raw in arb_set(),
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let items: Vec<EvalItem> = raw.iter().map(|(h, r)| EvalItem::new(h, r)).collect();
            let mut shuffled = items.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let a = EvalSet::new("a", items).unwrap();
            let b = EvalSet::new("b", shuffled).unwrap();
            let p = MockProvider::default();
            let ra = evaluate(&a, &p).unwrap();
            let rb = evaluate(&b, &p).unwrap();
            for (x, y) in [
                (ra.bleu, rb.bleu),
                (ra.meteor, rb.meteor),
                (ra.chrf, rb.chrf),
                (ra.chrf_pp, rb.chrf_pp),
                (ra.sbert_score, rb.sbert_score),
            ] {
                prop_assert!((0.0..=100.0).contains(&x), "{x}");
                prop_assert!((x - y).abs() <= 1e-9, "{x} vs {y}");
            }
        }
    }
}
