//! End-to-end filtering: ingest, dedup, score, threshold, emit.
//!
//! Reading and dedup run on their own thread and hand chunks to the scoring
//! stage over a bounded channel, so memory stays flat in corpus length apart
//! from the 16-byte-per-pair dedup set. Output order always equals input order.

mod config;
mod digest;
mod report;
mod scoring;

pub use config::{parse_config_text, read_config_file, PipelineConfig, ProviderConfig, KEYS};
pub use digest::{sha256_file, HashingReader, HashingWriter};
pub use report::{report, Report};
pub use scoring::Scorer;

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::mpsc::{sync_channel, Receiver};
use std::thread;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::dedup::Deduplicator;
use crate::error::{Error, Result};
use crate::ingest::{corpus_name, open_corpus, CorpusFormat, CorpusReader, CorpusWriter};
use crate::model::{CorpusStats, ScoredPair, SentencePair, SimilarityThreshold};
use crate::similarity::{ScoreCache, ScoreOutcome};

const CHUNK: usize = 1000;

type OutWriter = CorpusWriter<HashingWriter<BufWriter<File>>>;

fn create_out(path: &Path) -> Result<OutWriter> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(CorpusWriter::new(
        HashingWriter::new(BufWriter::with_capacity(1 << 16, file)),
        CorpusFormat::Jsonl,
        path,
    ))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub path: PathBuf,
    pub records: u64,
    pub sha256: String,
}

fn finish_out(w: OutWriter, path: &Path) -> Result<OutputRecord> {
    let records = w.written();
    let mut inner = w.into_inner();
    inner.flush().map_err(|e| Error::io(path, e))?;
    Ok(OutputRecord {
        path: path.to_path_buf(),
        records,
        sha256: inner.hex_digest(),
    })
}

/// Provenance written next to every run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub status: &'static str,
    pub config: PipelineConfig,
    pub provider_id: String,
    pub input_sha256: Option<String>,
    pub outputs: Vec<OutputRecord>,
    pub stats: Option<CorpusStats>,
    pub error: Option<String>,
}

struct ReadSummary {
    total_read: u64,
    duplicates_removed: u64,
    skipped: u64,
    input_sha256: String,
}

type ReaderHandle = thread::JoinHandle<Result<ReadSummary>>;

/// Reads, dedups and forwards chunks of at most `CHUNK` pairs; at most
/// `capacity` pairs wait in the channel.
fn spawn_reader(
    path: &Path,
    format: CorpusFormat,
    capacity: usize,
) -> Result<(Receiver<Vec<SentencePair>>, ReaderHandle)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let name = corpus_name(path);
    let chunk = CHUNK.min(capacity).max(1);
    let (tx, rx) = sync_channel::<Vec<SentencePair>>((capacity / chunk).max(1));
    let handle = thread::Builder::new()
        .name("ingest".into())
        .spawn(move || {
            let mut reader = CorpusReader::new(
                BufReader::with_capacity(1 << 16, HashingReader::new(file)),
                format,
                name,
            );
            let mut dedup = Deduplicator::new();
            let mut total = 0u64;
            let mut buf = Vec::with_capacity(chunk);
            for rec in reader.by_ref() {
                let rec = rec?;
                total += 1;
                if dedup.admit(&rec.pair) {
                    buf.push(rec.pair);
                    if buf.len() == chunk
                        && tx
                            .send(std::mem::replace(&mut buf, Vec::with_capacity(chunk)))
                            .is_err()
                    {
                        // consumer gave up; it reports its own error
                        break;
                    }
                }
            }
            if !buf.is_empty() {
                let _ = tx.send(buf);
            }
            let skipped = reader.skipped();
            let input_sha256 = reader.into_inner().into_inner().hex_digest();
            Ok(ReadSummary {
                total_read: total,
                duplicates_removed: dedup.removed(),
                skipped,
                input_sha256,
            })
        })
        .map_err(|e| Error::io("ingest thread", e))?;
    Ok((rx, handle))
}

struct Sinks {
    kept: OutWriter,
    rejected: OutWriter,
    unscored: Option<OutWriter>,
}

fn emit(
    outcomes: Vec<ScoreOutcome>,
    tau: SimilarityThreshold,
    sinks: &mut Sinks,
    stats: &mut CorpusStats,
) -> Result<()> {
    for outcome in outcomes {
        match outcome {
            ScoreOutcome::Scored(sp) => {
                let keep = tau.keeps(sp.similarity());
                stats.record_scored(sp.similarity(), keep);
                if keep {
                    sinks.kept.write_scored(&sp)?;
                } else {
                    sinks.rejected.write_scored(&sp)?;
                }
            }
            ScoreOutcome::Unscored { pair, reason } => {
                let sink = sinks
                    .unscored
                    .as_mut()
                    .ok_or_else(|| Error::NoUnscoredSink(pair.id.clone()))?;
                warn!("pair {} unscored: {reason}", pair.id);
                stats.unscored += 1;
                sink.write_pair(&pair)?;
            }
        }
    }
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Runs the whole pipeline described by `config`.
///
/// On failure, partial kept/rejected/unscored/stats files are removed and the
/// manifest is written with `"status": "failed"`.
pub fn run_pipeline(config: &PipelineConfig) -> Result<CorpusStats> {
    config.validate()?;
    let provider = config.provider.build()?;
    let mut manifest = RunManifest {
        tool: "bitext",
        version: env!("CARGO_PKG_VERSION"),
        status: "failed",
        config: config.clone(),
        provider_id: provider.provider_id().to_string(),
        input_sha256: None,
        outputs: Vec::new(),
        stats: None,
        error: None,
    };
    match run_inner(config, provider.as_ref(), &mut manifest) {
        Ok(stats) => {
            manifest.status = "complete";
            manifest.stats = Some(stats.clone());
            write_json(&config.manifest_path, &manifest)?;
            Ok(stats)
        }
        Err(e) => {
            for p in [
                Some(&config.kept_path),
                Some(&config.rejected_path),
                config.unscored_path.as_ref(),
                Some(&config.stats_path),
            ]
            .into_iter()
            .flatten()
            {
                let _ = fs::remove_file(p);
            }
            manifest.outputs.clear();
            manifest.error = Some(e.to_string());
            if let Err(me) = write_json(&config.manifest_path, &manifest) {
                warn!("could not write failure manifest: {me}");
            }
            Err(e)
        }
    }
}

fn run_inner(
    config: &PipelineConfig,
    provider: &dyn crate::similarity::EmbeddingProvider,
    manifest: &mut RunManifest,
) -> Result<CorpusStats> {
    let cache = config
        .cache_path
        .as_deref()
        .map(|p| ScoreCache::open(p, provider.provider_id()))
        .transpose()?;
    let scorer = Scorer::new(provider, cache.as_ref(), config.jobs)?;
    let mut sinks = Sinks {
        kept: create_out(&config.kept_path)?,
        rejected: create_out(&config.rejected_path)?,
        unscored: config
            .unscored_path
            .as_deref()
            .map(create_out)
            .transpose()?,
    };
    let (rx, reader) = spawn_reader(
        &config.input_path,
        config.input_format,
        config.queue_capacity,
    )?;

    let mut stats = CorpusStats::default();
    let consumed: Result<()> = rx.iter().try_for_each(|chunk| {
        let outcomes = scorer.score_chunk(&chunk)?;
        emit(outcomes, config.tau, &mut sinks, &mut stats)
    });
    drop(rx);
    let read = reader
        .join()
        .map_err(|_| Error::Config("ingest thread panicked".into()))?;
    consumed?;
    let read = read?;
    if let Some(c) = &cache {
        c.flush()?;
    }

    stats.total_read = read.total_read;
    stats.duplicates_removed = read.duplicates_removed;
    stats.skipped_malformed = read.skipped;
    manifest.input_sha256 = Some(read.input_sha256);

    manifest
        .outputs
        .push(finish_out(sinks.kept, &config.kept_path)?);
    manifest
        .outputs
        .push(finish_out(sinks.rejected, &config.rejected_path)?);
    if let (Some(w), Some(p)) = (sinks.unscored, &config.unscored_path) {
        manifest.outputs.push(finish_out(w, p)?);
    }
    stats
        .check(true)
        .map_err(|e| Error::Config(format!("internal accounting error: {e}")))?;
    write_json(&config.stats_path, &stats)?;
    info!(
        "read {} pairs, {} duplicates, {} scored, {} kept, {} rejected",
        stats.total_read, stats.duplicates_removed, stats.scored, stats.retained, stats.rejected
    );
    Ok(stats)
}

/// Counts from a standalone dedup stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DedupSummary {
    pub total_read: u64,
    pub written: u64,
    pub duplicates_removed: u64,
    pub skipped_malformed: u64,
}

pub fn dedup_file(
    input: &Path,
    input_format: CorpusFormat,
    output: &Path,
    output_format: CorpusFormat,
) -> Result<DedupSummary> {
    let mut reader = open_corpus(input, input_format)?;
    let mut writer = CorpusWriter::create(output, output_format)?;
    let mut dedup = Deduplicator::new();
    let mut total = 0;
    for rec in reader.by_ref() {
        let rec = rec?;
        total += 1;
        if dedup.admit(&rec.pair) {
            writer.write_record(&rec.pair, rec.score, rec.scorer.as_deref())?;
        }
    }
    Ok(DedupSummary {
        total_read: total,
        written: writer.finish()?,
        duplicates_removed: dedup.removed(),
        skipped_malformed: reader.skipped(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ScoreSummary {
    pub total_read: u64,
    pub scored: u64,
    pub unscored: u64,
    pub skipped_malformed: u64,
}

/// Standalone scoring stage: every input pair is written to `output` with its
/// score, or to `unscored` when it cannot be scored.
pub fn score_file(
    input: &Path,
    input_format: CorpusFormat,
    output: &Path,
    unscored: Option<&Path>,
    scorer: &Scorer<'_>,
) -> Result<ScoreSummary> {
    let mut reader = open_corpus(input, input_format)?;
    let mut out = CorpusWriter::create(output, CorpusFormat::Jsonl)?;
    let mut side = unscored
        .map(|p| CorpusWriter::create(p, CorpusFormat::Jsonl))
        .transpose()?;
    let mut summary = ScoreSummary {
        total_read: 0,
        scored: 0,
        unscored: 0,
        skipped_malformed: 0,
    };
    let mut flush = |chunk: &mut Vec<SentencePair>, summary: &mut ScoreSummary| -> Result<()> {
        for outcome in scorer.score_chunk(chunk)? {
            match outcome {
                ScoreOutcome::Scored(sp) => {
                    out.write_scored(&sp)?;
                    summary.scored += 1;
                }
                ScoreOutcome::Unscored { pair, reason } => {
                    let w = side
                        .as_mut()
                        .ok_or_else(|| Error::NoUnscoredSink(pair.id.clone()))?;
                    warn!("pair {} unscored: {reason}", pair.id);
                    w.write_pair(&pair)?;
                    summary.unscored += 1;
                }
            }
        }
        chunk.clear();
        Ok(())
    };
    let mut chunk = Vec::with_capacity(CHUNK);
    for rec in reader.by_ref() {
        chunk.push(rec?.pair);
        summary.total_read += 1;
        if chunk.len() == CHUNK {
            flush(&mut chunk, &mut summary)?;
        }
    }
    flush(&mut chunk, &mut summary)?;
    summary.skipped_malformed = reader.skipped();
    out.finish()?;
    if let Some(w) = side {
        w.finish()?;
    }
    Ok(summary)
}

/// Standalone threshold stage over a scored JSONL file. Records without a
/// score are an error.
pub fn filter_file(
    input: &Path,
    tau: SimilarityThreshold,
    kept: &Path,
    rejected: &Path,
) -> Result<CorpusStats> {
    let mut reader = open_corpus(input, CorpusFormat::Jsonl)?;
    let mut kept_w = CorpusWriter::create(kept, CorpusFormat::Jsonl)?;
    let mut rej_w = CorpusWriter::create(rejected, CorpusFormat::Jsonl)?;
    let mut stats = CorpusStats::default();
    for rec in reader.by_ref() {
        let rec = rec?;
        stats.total_read += 1;
        let score = rec
            .score
            .ok_or_else(|| Error::Malformed(format!("pair {} has no score", rec.pair.id)))?;
        let sp = ScoredPair::new(rec.pair, score, rec.scorer.unwrap_or_default())?;
        let keep = tau.keeps(sp.similarity());
        stats.record_scored(sp.similarity(), keep);
        if keep {
            kept_w.write_scored(&sp)?;
        } else {
            rej_w.write_scored(&sp)?;
        }
    }
    stats.skipped_malformed = reader.skipped();
    kept_w.finish()?;
    rej_w.finish()?;
    Ok(stats)
}
