use std::collections::BTreeMap;
use std::path::Path;
use std::sync::{Arc, PoisonError, RwLock};

use chrono::{DateTime, Duration, Utc};
use log::info;
use serde::Serialize;

use crate::decision::{Decision, DecisionRequest};
use crate::error::Result;
use crate::export::{gold_items, write_gold, ExportOrder};
use crate::log::{DecisionLog, LogEvent};
use crate::sample::load_queue;
use crate::state::ReviewState;

pub type Clock = Arc<dyn Fn() -> DateTime<Utc> + Send + Sync>;

pub const DEFAULT_LEASE: Duration = Duration::minutes(10);

#[derive(Clone)]
pub struct ServiceOptions {
    pub lease_window: Duration,
    pub clock: Clock,
}

impl Default for ServiceOptions {
    fn default() -> Self {
        ServiceOptions {
            lease_window: DEFAULT_LEASE,
            clock: Arc::new(Utc::now),
        }
    }
}

/// Body of a `200` from `GET /api/queue/next`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assignment {
    pub pair_id: String,
    pub src: String,
    pub tgt: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
    pub lease_expiry: DateTime<Utc>,
}

/// Body of `GET /api/stats`. `defect_rate` is null until something is decided.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ServiceStats {
    pub pending: u64,
    pub leased: u64,
    pub decided: u64,
    pub per_label: BTreeMap<String, u64>,
    pub defect_rate: Option<f64>,
}

struct Inner {
    state: ReviewState,
    log: DecisionLog,
}

/// The review workflow over one queue and its log. Mutations take the write
/// lock, so log appends and state changes happen in one serialized order;
/// stats and export only read.
pub struct CurationService {
    inner: RwLock<Inner>,
    opts: ServiceOptions,
}

impl CurationService {
    /// Loads the queue, replays the log and reopens it for appending.
    pub fn open(queue_path: &Path, log_path: &Path, opts: ServiceOptions) -> Result<Self> {
        let items = load_queue(queue_path)?;
        let (log, events) = DecisionLog::open(log_path)?;
        let state = ReviewState::replay(items, &events)?;
        info!(
            "{} queued pairs, {} events replayed from {}",
            state.items().len(),
            events.len(),
            log_path.display()
        );
        Ok(CurationService {
            inner: RwLock::new(Inner { state, log }),
            opts,
        })
    }

    fn now(&self) -> DateTime<Utc> {
        (self.opts.clock)()
    }

    /// Leases the next pair to `reviewer`, or `None` when no work is left.
    pub fn next_pending(&self, reviewer: &str) -> Result<Option<Assignment>> {
        if reviewer.trim().is_empty() {
            return Err(crate::CurationError::Invalid(
                "reviewer must be non-empty".into(),
            ));
        }
        let mut inner = self.inner.write().unwrap_or_else(PoisonError::into_inner);
        let now = self.now();
        let Some(lease) = inner
            .state
            .plan_lease(reviewer, now, self.opts.lease_window)
        else {
            return Ok(None);
        };
        let event = LogEvent::Lease(lease);
        inner.log.append(&event)?;
        inner.state.apply(&event)?;
        let LogEvent::Lease(lease) = event else {
            unreachable!()
        };
        let item = inner
            .state
            .item(&lease.pair_id)
            .expect("leased pair is queued");
        Ok(Some(Assignment {
            pair_id: lease.pair_id.clone(),
            src: item.pair.source_text.clone(),
            tgt: item.pair.target_text.clone(),
            score: item.score,
            lease_expiry: lease.expiry,
        }))
    }

    pub fn record_decision(&self, req: DecisionRequest) -> Result<Decision> {
        let mut inner = self.inner.write().unwrap_or_else(PoisonError::into_inner);
        let now = self.now();
        let decision = Decision::from_request(req, now)?;
        inner.state.check_decision(&decision, now)?;
        let event = LogEvent::Decision(decision.clone());
        inner.log.append(&event)?;
        inner.state.apply(&event)?;
        Ok(decision)
    }

    pub fn stats(&self) -> ServiceStats {
        let inner = self.inner.read().unwrap_or_else(PoisonError::into_inner);
        let counts = inner.state.counts(self.now());
        let assessment = inner.state.assessment().ok();
        ServiceStats {
            pending: counts.pending,
            leased: counts.leased,
            decided: counts.decided,
            per_label: inner.state.label_counts(),
            defect_rate: assessment.map(|a| a.defect_rate),
        }
    }

    /// The gold set as JSONL bytes.
    pub fn export(&self, order: ExportOrder, limit: Option<usize>) -> Result<Vec<u8>> {
        let inner = self.inner.read().unwrap_or_else(PoisonError::into_inner);
        let items = gold_items(&inner.state, order, limit)?;
        write_gold(&items, Vec::new())
    }
}
