//! Gold test-set curation: sample candidate pairs, lease them to reviewers,
//! record accept/reject/flag decisions in an append-only log, and export the
//! accepted pairs as an evaluation set.

mod decision;
mod error;
pub mod export;
pub mod http;
pub mod log;
pub mod sample;
pub mod service;
pub mod state;

pub use decision::{Decision, DecisionRequest, Verdict};
pub use error::{CurationError, Result};
pub use export::{export_gold, ExportOrder};
pub use sample::{load_queue, sample_candidates};
pub use service::{Assignment, CurationService, ServiceOptions, ServiceStats};
pub use state::{assessment_stats, AssessmentStats, QueueItem, ReviewState};

/// Assessment statistics over the decisions in a log file.
pub fn record_assessment_stats(log_path: &std::path::Path) -> Result<AssessmentStats> {
    let events = log::read_log(log_path)?;
    assessment_stats(events.iter().filter_map(log::LogEvent::as_decision))
}
