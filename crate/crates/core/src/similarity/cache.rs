//! On-disk score cache keyed by (provider id, pair fingerprint).
//!
//! The file is JSONL, one `{"provider", "key", "score"}` object per line,
//! appended as new pairs are scored. Entries for other providers are left in
//! the file but ignored.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::dedup::PairFingerprint;
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
struct CacheLine<'a> {
    provider: std::borrow::Cow<'a, str>,
    key: String,
    score: f64,
}

pub struct ScoreCache {
    path: PathBuf,
    provider_id: String,
    entries: RwLock<HashMap<u128, f64>>,
    writer: Mutex<BufWriter<File>>,
}

impl ScoreCache {
    pub fn open(path: &Path, provider_id: &str) -> Result<Self> {
        let mut entries = HashMap::new();
        if path.exists() {
            let file = File::open(path).map_err(|e| Error::io(path, e))?;
            for (i, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(|e| Error::io(path, e))?;
                match serde_json::from_str::<CacheLine>(&line) {
                    Ok(l) if l.provider == provider_id => match u128::from_str_radix(&l.key, 16) {
                        Ok(k) if (0.0..=1.0).contains(&l.score) => {
                            entries.insert(k, l.score);
                        }
                        _ => warn!("{}:{}: bad cache entry", path.display(), i + 1),
                    },
                    Ok(_) => {}
                    Err(_) => warn!("{}:{}: unreadable cache line", path.display(), i + 1),
                }
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        Ok(ScoreCache {
            path: path.to_path_buf(),
            provider_id: provider_id.to_string(),
            entries: RwLock::new(entries),
            writer: Mutex::new(BufWriter::new(file)),
        })
    }

    pub fn len(&self) -> usize {
        self.entries.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, key: PairFingerprint) -> Option<f64> {
        self.entries.read().unwrap().get(&key.0).copied()
    }

    pub fn insert(&self, key: PairFingerprint, score: f64) -> Result<()> {
        {
            let mut entries = self.entries.write().unwrap();
            if entries.insert(key.0, score).is_some() {
                return Ok(());
            }
        }
        let line = CacheLine {
            provider: self.provider_id.as_str().into(),
            key: key.to_hex(),
            score,
        };
        let mut buf = serde_json::to_vec(&line)?;
        buf.push(b'\n');
        self.writer
            .lock()
            .unwrap()
            .write_all(&buf)
            .map_err(|e| Error::io(&self.path, e))
    }

    pub fn flush(&self) -> Result<()> {
        self.writer
            .lock()
            .unwrap()
            .flush()
            .map_err(|e| Error::io(&self.path, e))
    }
}

impl Drop for ScoreCache {
    fn drop(&mut self) {
        if let Ok(mut w) = self.writer.lock() {
            let _ = w.flush();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn persists_across_opens_and_separates_providers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        let k1 = PairFingerprint::of("a", "b");
        let k2 = PairFingerprint::of("c", "d");
        {
            let c = ScoreCache::open(&path, "mock").unwrap();
            assert!(c.is_empty());
            c.insert(k1, 0.25).unwrap();
            c.insert(k1, 0.25).unwrap();
            c.insert(k2, 1.0).unwrap();
        }
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 2);

        let c = ScoreCache::open(&path, "mock").unwrap();
        assert_eq!(c.get(k1), Some(0.25));
        assert_eq!(c.get(k2), Some(1.0));
        let other = ScoreCache::open(&path, "remote:x").unwrap();
        assert_eq!(other.get(k1), None);
    }

    #[test]
    fn concurrent_inserts() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        let c = ScoreCache::open(&path, "mock").unwrap();
        std::thread::scope(|s| {
            for t in 0..4 {
                let c = &c;
                s.spawn(move || {
                    for i in 0..100 {
                        c.insert(PairFingerprint::of(&format!("{t}-{i}"), "x"), 0.5)
                            .unwrap();
                    }
                });
            }
        });
        c.flush().unwrap();
        assert_eq!(c.len(), 400);
        drop(c);
        assert_eq!(ScoreCache::open(&path, "mock").unwrap().len(), 400);
    }
}
