use std::fmt;
use std::str::FromStr;

use bitext_core::DiscrepancyLabel;
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{CurationError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Accept,
    Reject,
    Flag,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Accept => "Accept",
            Verdict::Reject => "Reject",
            Verdict::Flag => "Flag",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Verdict {
    type Err = CurationError;

    fn from_str(s: &str) -> Result<Self> {
        [Verdict::Accept, Verdict::Reject, Verdict::Flag]
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| CurationError::Invalid(format!("unknown verdict {s:?}")))
    }
}

/// Body of `POST /api/decision`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecisionRequest {
    pub pair_id: String,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<DiscrepancyLabel>,
    pub reviewer: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// A recorded review outcome. Once logged it is never changed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub pair_id: String,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<DiscrepancyLabel>,
    pub reviewer: String,
    pub timestamp: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Decision {
    pub fn from_request(req: DecisionRequest, timestamp: DateTime<Utc>) -> Result<Self> {
        let d = Decision {
            pair_id: req.pair_id,
            verdict: req.verdict,
            label: req.label,
            reviewer: req.reviewer,
            timestamp,
            note: req.note,
        };
        d.validate()?;
        Ok(d)
    }

    /// An accepted pair carries no label or `Accurate`; rejected and flagged
    /// pairs never carry `Accurate`.
    pub fn validate(&self) -> Result<()> {
        if self.reviewer.trim().is_empty() {
            return Err(CurationError::Invalid("reviewer must be non-empty".into()));
        }
        match (self.verdict, self.label) {
            (Verdict::Accept, Some(l)) if l != DiscrepancyLabel::Accurate => Err(
                CurationError::Invalid(format!("Accept cannot carry defect label {l}")),
            ),
            (Verdict::Reject | Verdict::Flag, Some(DiscrepancyLabel::Accurate)) => Err(
                CurationError::Invalid(format!("{} cannot carry label Accurate", self.verdict)),
            ),
            _ => Ok(()),
        }
    }

    /// `Accurate` for accepted pairs, otherwise the reviewer's label, if any.
    pub fn effective_label(&self) -> Option<DiscrepancyLabel> {
        match self.verdict {
            Verdict::Accept => Some(DiscrepancyLabel::Accurate),
            _ => self.label,
        }
    }
}
