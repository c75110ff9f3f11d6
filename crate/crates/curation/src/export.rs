use std::cmp::Ordering;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use bitext_core::ingest::{CorpusFormat, CorpusWriter};
use serde::Deserialize;

use crate::error::{CurationError, Result};
use crate::log::read_log;
use crate::sample::load_queue;
use crate::state::{QueueItem, ReviewState};

/// Order of the exported gold set. `Decision` follows the log; `Score` sorts
/// by similarity, highest first, unscored pairs last, ties in log order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportOrder {
    #[default]
    Decision,
    Score,
}

impl FromStr for ExportOrder {
    type Err = CurationError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "decision" => Ok(ExportOrder::Decision),
            "score" => Ok(ExportOrder::Score),
            _ => Err(CurationError::Invalid(format!(
                "unknown export order {s:?} (expected decision or score)"
            ))),
        }
    }
}

/// Accepted pairs in export order, truncated to `limit`.
pub fn gold_items(
    state: &ReviewState,
    order: ExportOrder,
    limit: Option<usize>,
) -> Result<Vec<&QueueItem>> {
    if limit == Some(0) {
        return Err(CurationError::Invalid("limit must be positive".into()));
    }
    let mut items: Vec<&QueueItem> = state.accepted().map(|(_, it)| it).collect();
    if items.is_empty() {
        return Err(CurationError::EmptyGoldSet);
    }
    if order == ExportOrder::Score {
        // stable sort keeps log order among equal scores
        items.sort_by(|a, b| match (a.score, b.score) {
            (Some(x), Some(y)) => y.total_cmp(&x),
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (None, None) => Ordering::Equal,
        });
    }
    items.truncate(limit.unwrap_or(usize::MAX));
    Ok(items)
}

/// Writes JSONL records (`id`, `src`, `tgt`, `meta`, `score`) that load
/// directly as an evaluation set, with `tgt` as the reference.
pub fn write_gold<W: Write>(items: &[&QueueItem], out: W) -> Result<W> {
    let mut w = CorpusWriter::new(out, CorpusFormat::Jsonl, "<export>");
    for it in items {
        w.write_record(&it.pair, it.score, None)?;
    }
    Ok(w.into_inner())
}

/// Offline export from a queue file and its event log.
pub fn export_gold(
    queue_path: &Path,
    log_path: &Path,
    order: ExportOrder,
    limit: Option<usize>,
    out_path: &Path,
) -> Result<u64> {
    let state = ReviewState::replay(load_queue(queue_path)?, &read_log(log_path)?)?;
    let items = gold_items(&state, order, limit)?;
    let file = std::fs::File::create(out_path).map_err(|e| CurationError::io(out_path, e))?;
    let mut out = write_gold(&items, std::io::BufWriter::new(file))?;
    out.flush().map_err(|e| CurationError::io(out_path, e))?;
    Ok(items.len() as u64)
}
