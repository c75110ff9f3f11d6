//! Domain types shared by every stage of the toolkit.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One aligned source/target sentence pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentencePair {
    pub id: String,
    pub source_text: String,
    pub target_text: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub meta: BTreeMap<String, String>,
}

impl SentencePair {
    pub fn new(
        id: impl Into<String>,
        source_text: impl Into<String>,
        target_text: impl Into<String>,
    ) -> Self {
        SentencePair {
            id: id.into(),
            source_text: source_text.into(),
            target_text: target_text.into(),
            meta: BTreeMap::new(),
        }
    }
}

/// Clamps a raw similarity into `[0, 1]`. Non-finite input is rejected.
pub fn clamp_similarity(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::InvalidScore(x));
    }
    Ok(x.clamp(0.0, 1.0))
}

/// A pair annotated with its similarity score and the scorer that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScoredPairRepr")]
pub struct ScoredPair {
    pub pair: SentencePair,
    similarity: f64,
    pub scorer_id: String,
}

impl ScoredPair {
    /// Builds a scored pair, clamping `raw` into `[0, 1]`.
    pub fn new(pair: SentencePair, raw: f64, scorer_id: impl Into<String>) -> Result<Self> {
        Ok(ScoredPair {
            pair,
            similarity: clamp_similarity(raw)?,
            scorer_id: scorer_id.into(),
        })
    }

    pub fn similarity(&self) -> f64 {
        self.similarity
    }
}

#[derive(Deserialize)]
struct ScoredPairRepr {
    pair: SentencePair,
    similarity: f64,
    scorer_id: String,
}

impl TryFrom<ScoredPairRepr> for ScoredPair {
    type Error = Error;

    fn try_from(r: ScoredPairRepr) -> Result<Self> {
        ScoredPair::new(r.pair, r.similarity, r.scorer_id)
    }
}

/// Keep/expel cutoff on the `[0, 1]` similarity scale.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct SimilarityThreshold(f64);

impl SimilarityThreshold {
    pub const DEFAULT: f64 = 0.7;

    pub fn new(tau: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::InvalidThreshold(tau));
        }
        Ok(SimilarityThreshold(tau))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Inclusive: a score equal to the threshold is kept.
    pub fn keeps(self, similarity: f64) -> bool {
        similarity >= self.0
    }
}

impl Default for SimilarityThreshold {
    fn default() -> Self {
        SimilarityThreshold(Self::DEFAULT)
    }
}

impl TryFrom<f64> for SimilarityThreshold {
    type Error = Error;

    fn try_from(v: f64) -> Result<Self> {
        SimilarityThreshold::new(v)
    }
}

impl From<SimilarityThreshold> for f64 {
    fn from(t: SimilarityThreshold) -> f64 {
        t.0
    }
}

impl FromStr for SimilarityThreshold {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let v: f64 = s
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("threshold {s:?} is not a number")))?;
        SimilarityThreshold::new(v)
    }
}

impl fmt::Display for SimilarityThreshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Translation defect categories a reviewer can assign, plus `Accurate`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DiscrepancyLabel {
    NuanceLoss,
    DifferentMeaning,
    Ambiguous,
    MissingContext,
    SimilarContextDistinctMeaning,
    Accurate,
}

impl DiscrepancyLabel {
    /// The five defect labels, in the order reviewers pick them (keys 1-5).
    pub const DEFECTS: [DiscrepancyLabel; 5] = [
        DiscrepancyLabel::NuanceLoss,
        DiscrepancyLabel::DifferentMeaning,
        DiscrepancyLabel::Ambiguous,
        DiscrepancyLabel::MissingContext,
        DiscrepancyLabel::SimilarContextDistinctMeaning,
    ];

    pub const ALL: [DiscrepancyLabel; 6] = [
        DiscrepancyLabel::NuanceLoss,
        DiscrepancyLabel::DifferentMeaning,
        DiscrepancyLabel::Ambiguous,
        DiscrepancyLabel::MissingContext,
        DiscrepancyLabel::SimilarContextDistinctMeaning,
        DiscrepancyLabel::Accurate,
    ];

    pub fn is_defect(self) -> bool {
        self != DiscrepancyLabel::Accurate
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DiscrepancyLabel::NuanceLoss => "NuanceLoss",
            DiscrepancyLabel::DifferentMeaning => "DifferentMeaning",
            DiscrepancyLabel::Ambiguous => "Ambiguous",
            DiscrepancyLabel::MissingContext => "MissingContext",
            DiscrepancyLabel::SimilarContextDistinctMeaning => "SimilarContextDistinctMeaning",
            DiscrepancyLabel::Accurate => "Accurate",
        }
    }
}

impl fmt::Display for DiscrepancyLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DiscrepancyLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DiscrepancyLabel::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| Error::Malformed(format!("unknown discrepancy label {s:?}")))
    }
}

pub const HISTOGRAM_BINS: usize = 20;

/// Counters for one filtering run.
///
/// With the full pipeline, `total_read = duplicates_removed + scored + unscored`
/// and `scored = retained + rejected`; the histogram sums to `scored`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub total_read: u64,
    pub skipped_malformed: u64,
    pub duplicates_removed: u64,
    pub scored: u64,
    pub unscored: u64,
    pub retained: u64,
    pub rejected: u64,
    pub score_histogram: Vec<u64>,
}

impl Default for CorpusStats {
    fn default() -> Self {
        CorpusStats {
            total_read: 0,
            skipped_malformed: 0,
            duplicates_removed: 0,
            scored: 0,
            unscored: 0,
            retained: 0,
            rejected: 0,
            score_histogram: vec![0; HISTOGRAM_BINS],
        }
    }
}

/// Histogram bin of a score; `1.0` lands in the last bin.
pub fn histogram_bin(similarity: f64) -> usize {
    ((similarity * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1)
}

impl CorpusStats {
    pub fn record_scored(&mut self, similarity: f64, kept: bool) {
        self.scored += 1;
        if kept {
            self.retained += 1;
        } else {
            self.rejected += 1;
        }
        self.score_histogram[histogram_bin(similarity)] += 1;
    }

    /// Checks the counting identities; returns a description of the first
    /// one that fails.
    pub fn check(&self, full_pipeline: bool) -> std::result::Result<(), String> {
        if self.score_histogram.len() != HISTOGRAM_BINS {
            return Err(format!("histogram has {} bins", self.score_histogram.len()));
        }
        if self.scored != self.retained + self.rejected {
            return Err("scored != retained + rejected".into());
        }
        if self.score_histogram.iter().sum::<u64>() != self.scored {
            return Err("histogram does not sum to scored".into());
        }
        if full_pipeline && self.total_read != self.duplicates_removed + self.scored + self.unscored
        {
            return Err("total_read != duplicates_removed + scored + unscored".into());
        }
        Ok(())
    }
}
