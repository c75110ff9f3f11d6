//! Streaming readers and writers for TSV and JSONL parallel corpora.
//!
//! TSV rows are `source<TAB>target[<TAB>id]`. JSONL objects carry `"src"`,
//! `"tgt"` and optionally `"id"`, `"meta"`, `"score"` and `"scorer"`.
//! Both sides are normalized on read; rows that are malformed or empty after
//! normalization are skipped and counted.

use std::borrow::Cow;
use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};
use unicode_normalization::{is_nfc, is_nfc_quick, IsNormalized, UnicodeNormalization};

use crate::error::{Error, Result};
use crate::model::{ScoredPair, SentencePair};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    Tsv,
    Jsonl,
}

impl CorpusFormat {
    /// Guesses the format from a file extension (`.tsv`/`.txt` vs `.jsonl`/`.json`).
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "tsv" | "txt" => Some(CorpusFormat::Tsv),
            "jsonl" | "json" | "ndjson" => Some(CorpusFormat::Jsonl),
            _ => None,
        }
    }
}

impl FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "tsv" => Ok(CorpusFormat::Tsv),
            "jsonl" => Ok(CorpusFormat::Jsonl),
            other => Err(Error::Config(format!("unknown corpus format {other:?}"))),
        }
    }
}

impl fmt::Display for CorpusFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CorpusFormat::Tsv => "tsv",
            CorpusFormat::Jsonl => "jsonl",
        })
    }
}

/// NFC, trimmed, internal whitespace runs collapsed to one space.
pub fn normalize(text: &str) -> String {
    normalize_cow(text).into_owned()
}

/// Like [`normalize`] but borrows when the text is already normal.
pub fn normalize_cow(text: &str) -> Cow<'_, str> {
    let nfc = match is_nfc_quick(text.chars()) {
        IsNormalized::Yes => true,
        IsNormalized::No => false,
        IsNormalized::Maybe => is_nfc(text),
    };
    if nfc && whitespace_is_normal(text) {
        return Cow::Borrowed(text);
    }
    let composed: String = text.nfc().collect();
    let mut out = String::with_capacity(composed.len());
    for word in composed.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    Cow::Owned(out)
}

fn whitespace_is_normal(text: &str) -> bool {
    let mut prev_space = true;
    for c in text.chars() {
        if c.is_whitespace() {
            if c != ' ' || prev_space {
                return false;
            }
            prev_space = true;
        } else {
            prev_space = false;
        }
    }
    !prev_space || text.is_empty()
}

/// A pair as read from disk, with the score fields scoring stages emit.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusRecord {
    pub pair: SentencePair,
    pub score: Option<f64>,
    pub scorer: Option<String>,
}

#[derive(Deserialize)]
struct JsonlIn {
    src: String,
    tgt: String,
    #[serde(default)]
    id: Option<String>,
    #[serde(default)]
    meta: BTreeMap<String, String>,
    #[serde(default)]
    score: Option<f64>,
    #[serde(default)]
    scorer: Option<String>,
}

#[derive(Serialize)]
struct JsonlOut<'a> {
    id: &'a str,
    src: &'a str,
    tgt: &'a str,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    meta: &'a BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    score: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    scorer: Option<&'a str>,
}

/// Streaming corpus reader. Yields records in file order; only I/O failures
/// are returned as errors, malformed lines bump [`CorpusReader::skipped`].
pub struct CorpusReader<R> {
    input: R,
    format: CorpusFormat,
    corpus_name: String,
    line_no: u64,
    skipped: u64,
    buf: Vec<u8>,
    failed: bool,
}

impl<R: BufRead> CorpusReader<R> {
    pub fn new(input: R, format: CorpusFormat, corpus_name: impl Into<String>) -> Self {
        CorpusReader {
            input,
            format,
            corpus_name: corpus_name.into(),
            line_no: 0,
            skipped: 0,
            buf: Vec::new(),
            failed: false,
        }
    }

    pub fn skipped(&self) -> u64 {
        self.skipped
    }

    pub fn into_inner(self) -> R {
        self.input
    }

    fn parse_line(&self, line: &str) -> std::result::Result<CorpusRecord, String> {
        let (src, tgt, id, meta, score, scorer) = match self.format {
            CorpusFormat::Tsv => {
                let cols: Vec<&str> = line.split('\t').collect();
                if cols.len() < 2 || cols.len() > 3 {
                    return Err(format!("expected 2 or 3 columns, found {}", cols.len()));
                }
                let id = cols.get(2).map(|s| s.to_string()).filter(|s| !s.is_empty());
                (
                    cols[0].to_string(),
                    cols[1].to_string(),
                    id,
                    BTreeMap::new(),
                    None,
                    None,
                )
            }
            CorpusFormat::Jsonl => {
                let rec: JsonlIn = serde_json::from_str(line).map_err(|e| e.to_string())?;
                if let Some(s) = rec.score {
                    if !(0.0..=1.0).contains(&s) {
                        return Err(format!("score {s} outside [0, 1]"));
                    }
                }
                (rec.src, rec.tgt, rec.id, rec.meta, rec.score, rec.scorer)
            }
        };
        let source_text = normalize(&src);
        let target_text = normalize(&tgt);
        if source_text.is_empty() || target_text.is_empty() {
            return Err("empty side after normalization".into());
        }
        let id = id.unwrap_or_else(|| format!("{}:{}", self.corpus_name, self.line_no));
        Ok(CorpusRecord {
            pair: SentencePair {
                id,
                source_text,
                target_text,
                meta,
            },
            score,
            scorer,
        })
    }
}

impl<R: BufRead> Iterator for CorpusReader<R> {
    type Item = Result<CorpusRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        loop {
            self.buf.clear();
            match self.input.read_until(b'\n', &mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => {
                    self.failed = true;
                    return Some(Err(Error::io(&self.corpus_name, e)));
                }
            }
            self.line_no += 1;
            let parsed = match std::str::from_utf8(&self.buf) {
                Ok(text) => {
                    let line = text.strip_suffix('\n').unwrap_or(text);
                    self.parse_line(line.strip_suffix('\r').unwrap_or(line))
                }
                Err(e) => Err(format!("invalid UTF-8: {e}")),
            };
            match parsed {
                Ok(rec) => return Some(Ok(rec)),
                Err(why) => {
                    warn!(
                        "{}:{}: skipping malformed line: {}",
                        self.corpus_name, self.line_no, why
                    );
                    self.skipped += 1;
                }
            }
        }
    }
}

/// Name used for generated ids: the file name without its extension.
pub fn corpus_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "corpus".to_string())
}

pub fn open_corpus(path: &Path, format: CorpusFormat) -> Result<CorpusReader<BufReader<File>>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(CorpusReader::new(
        BufReader::with_capacity(1 << 16, file),
        format,
        corpus_name(path),
    ))
}

/// Streams the sentence pairs of a corpus file.
pub fn read_pairs(
    path: &Path,
    format: CorpusFormat,
) -> Result<impl Iterator<Item = Result<SentencePair>>> {
    Ok(open_corpus(path, format)?.map(|r| r.map(|rec| rec.pair)))
}

/// Streaming corpus writer.
pub struct CorpusWriter<W: Write> {
    out: W,
    format: CorpusFormat,
    path: PathBuf,
    written: u64,
    line: Vec<u8>,
}

impl CorpusWriter<BufWriter<File>> {
    pub fn create(path: &Path, format: CorpusFormat) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        Ok(CorpusWriter::new(
            BufWriter::with_capacity(1 << 16, file),
            format,
            path,
        ))
    }
}

impl<W: Write> CorpusWriter<W> {
    pub fn new(out: W, format: CorpusFormat, path: impl Into<PathBuf>) -> Self {
        CorpusWriter {
            out,
            format,
            path: path.into(),
            written: 0,
            line: Vec::with_capacity(256),
        }
    }

    pub fn written(&self) -> u64 {
        self.written
    }

    /// Unwraps the underlying writer without flushing it.
    pub fn into_inner(self) -> W {
        self.out
    }

    pub fn write_pair(&mut self, pair: &SentencePair) -> Result<()> {
        self.write_record(pair, None, None)
    }

    pub fn write_scored(&mut self, scored: &ScoredPair) -> Result<()> {
        self.write_record(
            &scored.pair,
            Some(scored.similarity()),
            Some(&scored.scorer_id),
        )
    }

    pub fn write_record(
        &mut self,
        pair: &SentencePair,
        score: Option<f64>,
        scorer: Option<&str>,
    ) -> Result<()> {
        self.line.clear();
        match self.format {
            CorpusFormat::Tsv => {
                let bad = |s: &str| s.contains(['\t', '\n', '\r']);
                if bad(&pair.source_text) || bad(&pair.target_text) || bad(&pair.id) {
                    return Err(Error::UnencodableTsv {
                        id: pair.id.clone(),
                    });
                }
                self.line.extend_from_slice(pair.source_text.as_bytes());
                self.line.push(b'\t');
                self.line.extend_from_slice(pair.target_text.as_bytes());
                self.line.push(b'\t');
                self.line.extend_from_slice(pair.id.as_bytes());
            }
            CorpusFormat::Jsonl => {
                let rec = JsonlOut {
                    id: &pair.id,
                    src: &pair.source_text,
                    tgt: &pair.target_text,
                    meta: &pair.meta,
                    score,
                    scorer,
                };
                serde_json::to_writer(&mut self.line, &rec)?;
            }
        }
        self.line.push(b'\n');
        let written = self.written;
        self.out
            .write_all(&self.line)
            .map_err(|source| Error::PartialWrite {
                path: self.path.clone(),
                written,
                source,
            })?;
        self.written += 1;
        Ok(())
    }

    /// Flushes and returns the number of records written.
    pub fn finish(mut self) -> Result<u64> {
        let written = self.written;
        self.out.flush().map_err(|source| Error::PartialWrite {
            path: self.path.clone(),
            written,
            source,
        })?;
        Ok(written)
    }
}

/// Writes every pair to `path`; returns the count written.
pub fn write_pairs<I>(pairs: I, path: &Path, format: CorpusFormat) -> Result<u64>
where
    I: IntoIterator<Item = SentencePair>,
{
    let mut w = CorpusWriter::create(path, format)?;
    for p in pairs {
        w.write_pair(&p)?;
    }
    w.finish()
}
