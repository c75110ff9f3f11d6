//! Review queue state, rebuilt purely from the queue and the event log.

use std::collections::{BTreeMap, HashMap};

use bitext_core::{DiscrepancyLabel, SentencePair};
use chrono::{DateTime, Duration, Utc};
use serde::Serialize;

use crate::decision::{Decision, Verdict};
use crate::error::{CurationError, Result};
use crate::log::{Lease, LogEvent};

/// Bucket for rejected or flagged decisions that carry no label.
pub const UNLABELED: &str = "Unlabeled";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueueItem {
    pub pair: SentencePair,
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PairState {
    Pending,
    Leased {
        reviewer: String,
        expiry: DateTime<Utc>,
    },
    Decided,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct QueueCounts {
    pub pending: u64,
    pub leased: u64,
    pub decided: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssessmentStats {
    pub total: u64,
    pub defects: u64,
    pub per_label: BTreeMap<String, u64>,
    pub defect_rate: f64,
}

fn empty_label_counts() -> BTreeMap<String, u64> {
    DiscrepancyLabel::ALL
        .iter()
        .map(|l| l.as_str().to_string())
        .chain([UNLABELED.to_string()])
        .map(|k| (k, 0))
        .collect()
}

/// Per-label counts and the share of decisions that are not `Accurate`.
/// Every label key is present; the counts sum to the number of decisions.
pub fn assessment_stats<'a, I>(decisions: I) -> Result<AssessmentStats>
where
    I: IntoIterator<Item = &'a Decision>,
{
    let mut per_label = empty_label_counts();
    let (mut total, mut defects) = (0u64, 0u64);
    for d in decisions {
        total += 1;
        let key = match d.effective_label() {
            Some(l) => l.as_str(),
            None => UNLABELED,
        };
        *per_label.get_mut(key).expect("all keys present") += 1;
        if d.effective_label() != Some(DiscrepancyLabel::Accurate) {
            defects += 1;
        }
    }
    if total == 0 {
        return Err(CurationError::EmptyLog);
    }
    Ok(AssessmentStats {
        total,
        defects,
        per_label,
        defect_rate: defects as f64 / total as f64,
    })
}

#[derive(Debug, Clone)]
pub struct ReviewState {
    items: Vec<QueueItem>,
    index: HashMap<String, usize>,
    states: Vec<PairState>,
    decisions: Vec<Decision>,
}

impl ReviewState {
    pub fn new(items: Vec<QueueItem>) -> Result<Self> {
        let mut index = HashMap::with_capacity(items.len());
        for (i, it) in items.iter().enumerate() {
            if index.insert(it.pair.id.clone(), i).is_some() {
                return Err(CurationError::DuplicateId(it.pair.id.clone()));
            }
        }
        Ok(ReviewState {
            states: vec![PairState::Pending; items.len()],
            items,
            index,
            decisions: Vec::new(),
        })
    }

    /// Rebuilds state by applying `events` in order.
    pub fn replay<'a, I>(items: Vec<QueueItem>, events: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a LogEvent>,
    {
        let mut state = ReviewState::new(items)?;
        for ev in events {
            state.apply(ev)?;
        }
        Ok(state)
    }

    pub fn items(&self) -> &[QueueItem] {
        &self.items
    }

    pub fn decisions(&self) -> &[Decision] {
        &self.decisions
    }

    pub fn item(&self, pair_id: &str) -> Option<&QueueItem> {
        self.index.get(pair_id).map(|&i| &self.items[i])
    }

    fn position(&self, pair_id: &str) -> Result<usize> {
        self.index
            .get(pair_id)
            .copied()
            .ok_or_else(|| CurationError::UnknownPair(pair_id.to_string()))
    }

    /// State as seen at `now`: an expired lease reads as `Pending`.
    pub fn state_at(&self, idx: usize, now: DateTime<Utc>) -> PairState {
        match &self.states[idx] {
            PairState::Leased { expiry, .. } if *expiry <= now => PairState::Pending,
            s => s.clone(),
        }
    }

    pub fn counts(&self, now: DateTime<Utc>) -> QueueCounts {
        let mut c = QueueCounts::default();
        for i in 0..self.items.len() {
            match self.state_at(i, now) {
                PairState::Pending => c.pending += 1,
                PairState::Leased { .. } => c.leased += 1,
                PairState::Decided => c.decided += 1,
            }
        }
        c
    }

    /// The lease `reviewer` would receive at `now`: a renewal of the pair they
    /// already hold, otherwise the lowest-index available pair.
    pub fn plan_lease(
        &self,
        reviewer: &str,
        now: DateTime<Utc>,
        window: Duration,
    ) -> Option<Lease> {
        let held = (0..self.items.len()).find(|&i| {
            matches!(self.state_at(i, now), PairState::Leased { reviewer: ref r, .. } if r == reviewer)
        });
        let idx = held.or_else(|| {
            (0..self.items.len()).find(|&i| self.state_at(i, now) == PairState::Pending)
        })?;
        Some(Lease {
            pair_id: self.items[idx].pair.id.clone(),
            reviewer: reviewer.to_string(),
            at: now,
            expiry: now + window,
        })
    }

    /// Checks that `d` may be recorded at `now`: the pair exists, is not
    /// decided, and is not held by another reviewer's live lease.
    pub fn check_decision(&self, d: &Decision, now: DateTime<Utc>) -> Result<()> {
        d.validate()?;
        let idx = self.position(&d.pair_id)?;
        match self.state_at(idx, now) {
            PairState::Decided => Err(CurationError::Conflict(format!(
                "pair {} is already decided",
                d.pair_id
            ))),
            PairState::Leased { reviewer, .. } if reviewer != d.reviewer => {
                Err(CurationError::Conflict(format!(
                    "pair {} is leased to another reviewer",
                    d.pair_id
                )))
            }
            _ => Ok(()),
        }
    }

    /// Applies one logged event. Events that could not have been produced by a
    /// well-behaved writer are rejected.
    pub fn apply(&mut self, ev: &LogEvent) -> Result<()> {
        match ev {
            LogEvent::Lease(l) => {
                let idx = self.position(&l.pair_id)?;
                match self.state_at(idx, l.at) {
                    PairState::Decided => {
                        return Err(CurationError::Conflict(format!(
                            "lease on decided pair {}",
                            l.pair_id
                        )))
                    }
                    PairState::Leased { reviewer, .. } if reviewer != l.reviewer => {
                        return Err(CurationError::Conflict(format!(
                            "pair {} leased twice",
                            l.pair_id
                        )))
                    }
                    _ => {}
                }
                self.states[idx] = PairState::Leased {
                    reviewer: l.reviewer.clone(),
                    expiry: l.expiry,
                };
            }
            LogEvent::Decision(d) => {
                let idx = self.position(&d.pair_id)?;
                if self.states[idx] == PairState::Decided {
                    return Err(CurationError::Conflict(format!(
                        "pair {} decided twice",
                        d.pair_id
                    )));
                }
                self.states[idx] = PairState::Decided;
                self.decisions.push(d.clone());
            }
        }
        Ok(())
    }

    pub fn assessment(&self) -> Result<AssessmentStats> {
        assessment_stats(&self.decisions)
    }

    /// Per-label counts including zeros; empty when nothing is decided.
    pub fn label_counts(&self) -> BTreeMap<String, u64> {
        self.assessment()
            .map(|a| a.per_label)
            .unwrap_or_else(|_| empty_label_counts())
    }

    pub fn accepted(&self) -> impl Iterator<Item = (&Decision, &QueueItem)> {
        self.decisions
            .iter()
            .filter(|d| d.verdict == Verdict::Accept)
            .map(|d| (d, &self.items[self.index[&d.pair_id]]))
    }
}
