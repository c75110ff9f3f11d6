//! Append-only JSONL event log, the source of truth for review state.
//!
//! Each record is written with a single `write` call on a file opened in
//! append mode, so a crash leaves at most one torn final line. Replay drops
//! such a line and `DecisionLog::open` truncates it before appending again.

use std::fs::{File, OpenOptions};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use log::warn;
use serde::{Deserialize, Serialize};

use crate::decision::Decision;
use crate::error::{CurationError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lease {
    pub pair_id: String,
    pub reviewer: String,
    pub at: DateTime<Utc>,
    pub expiry: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LogEvent {
    Lease(Lease),
    Decision(Decision),
}

impl LogEvent {
    pub fn as_decision(&self) -> Option<&Decision> {
        match self {
            LogEvent::Decision(d) => Some(d),
            LogEvent::Lease(_) => None,
        }
    }
}

struct Parsed {
    events: Vec<LogEvent>,
    /// Byte length of the intact prefix.
    valid_len: u64,
    /// The intact prefix ends without a newline.
    needs_newline: bool,
}

fn parse_log(path: &Path, bytes: &[u8]) -> Result<Parsed> {
    let mut events = Vec::new();
    let mut pos = 0usize;
    let mut line_no = 0usize;
    while pos < bytes.len() {
        line_no += 1;
        let end = bytes[pos..]
            .iter()
            .position(|&b| b == b'\n')
            .map(|i| pos + i);
        let line = &bytes[pos..end.unwrap_or(bytes.len())];
        let parsed = std::str::from_utf8(line)
            .map_err(|e| e.to_string())
            .and_then(|s| serde_json::from_str::<LogEvent>(s).map_err(|e| e.to_string()));
        match (parsed, end) {
            (Ok(ev), Some(e)) => {
                events.push(ev);
                pos = e + 1;
            }
            (Ok(ev), None) => {
                events.push(ev);
                return Ok(Parsed {
                    events,
                    valid_len: bytes.len() as u64,
                    needs_newline: true,
                });
            }
            (Err(_), None) => {
                warn!("{}:{line_no}: dropping torn final record", path.display());
                break;
            }
            (Err(message), Some(_)) => {
                if line.iter().all(u8::is_ascii_whitespace) {
                    pos = end.unwrap() + 1;
                    continue;
                }
                return Err(CurationError::CorruptLog {
                    path: path.to_path_buf(),
                    line: line_no,
                    message,
                });
            }
        }
    }
    Ok(Parsed {
        events,
        valid_len: pos as u64,
        needs_newline: false,
    })
}

/// Reads every intact event; a missing file is an empty log.
pub fn read_log(path: &Path) -> Result<Vec<LogEvent>> {
    match std::fs::read(path) {
        Ok(bytes) => Ok(parse_log(path, &bytes)?.events),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Vec::new()),
        Err(e) => Err(CurationError::io(path, e)),
    }
}

pub struct DecisionLog {
    file: File,
    path: PathBuf,
}

impl DecisionLog {
    /// Opens (creating if needed) the log for appending and returns the
    /// events already in it.
    pub fn open(path: &Path) -> Result<(Self, Vec<LogEvent>)> {
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(path)
            .map_err(|e| CurationError::io(path, e))?;
        let mut bytes = Vec::new();
        file.read_to_end(&mut bytes)
            .map_err(|e| CurationError::io(path, e))?;
        let parsed = parse_log(path, &bytes)?;
        if parsed.valid_len < bytes.len() as u64 {
            file.set_len(parsed.valid_len)
                .map_err(|e| CurationError::io(path, e))?;
        }
        if parsed.needs_newline {
            file.write_all(b"\n")
                .map_err(|e| CurationError::io(path, e))?;
        }
        Ok((
            DecisionLog {
                file,
                path: path.to_path_buf(),
            },
            parsed.events,
        ))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&mut self, event: &LogEvent) -> Result<()> {
        let mut line = serde_json::to_vec(event).map_err(bitext_core::Error::from)?;
        line.push(b'\n');
        self.file
            .write_all(&line)
            .map_err(|e| CurationError::io(&self.path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decision::Verdict;

    fn decision(id: &str) -> LogEvent {
        LogEvent::Decision(Decision {
            pair_id: id.into(),
            verdict: Verdict::Accept,
            label: None,
            reviewer: "r".into(),
            timestamp: "2024-05-01T10:00:00Z".parse().unwrap(),
            note: None,
        })
    }

    #[test]
    fn round_trip_and_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.jsonl");
        let (mut log, prior) = DecisionLog::open(&path).unwrap();
        assert!(prior.is_empty());
        log.append(&decision("a")).unwrap();
        log.append(&decision("b")).unwrap();
        drop(log);
        let (_, events) = DecisionLog::open(&path).unwrap();
        assert_eq!(events, vec![decision("a"), decision("b")]);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(
            text.starts_with(r#"{"kind":"decision","pair_id":"a","#),
            "{text}"
        );
    }

    #[test]
    fn torn_tail_is_dropped_and_truncated() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.jsonl");
        let good = serde_json::to_string(&decision("a")).unwrap();
        std::fs::write(&path, format!("{good}\n{{\"kind\":\"decis")).unwrap();
        assert_eq!(read_log(&path).unwrap().len(), 1);
        let (mut log, events) = DecisionLog::open(&path).unwrap();
        assert_eq!(events.len(), 1);
        log.append(&decision("b")).unwrap();
        assert_eq!(read_log(&path).unwrap(), vec![decision("a"), decision("b")]);
    }

    #[test]
    fn complete_tail_without_newline_is_kept() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.jsonl");
        std::fs::write(&path, serde_json::to_string(&decision("a")).unwrap()).unwrap();
        let (mut log, events) = DecisionLog::open(&path).unwrap();
        assert_eq!(events.len(), 1);
        log.append(&decision("b")).unwrap();
        assert_eq!(read_log(&path).unwrap().len(), 2);
    }

    #[test]
    fn corruption_in_the_middle_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.jsonl");
        let good = serde_json::to_string(&decision("a")).unwrap();
        std::fs::write(&path, format!("garbage\n{good}\n")).unwrap();
        assert!(matches!(
            read_log(&path),
            Err(CurationError::CorruptLog { line: 1, .. })
        ));
    }
}
