//! Seeded synthetic parallel corpora for load tests and shape checks.
//!
//! A "clean" pair has a target that repeats the source with one word
//! swapped, which the mock provider scores well above 0.7. A "noisy" pair has
//! an unrelated target, which scores well below it. A fraction of lines are
//! exact repeats of a recent pair, some with extra whitespace.

use std::collections::VecDeque;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub pairs: u64,
    pub clean_fraction: f64,
    pub duplicate_fraction: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SynthSummary {
    pub written: u64,
    pub fresh: u64,
    pub fresh_clean: u64,
    pub duplicates: u64,
}

impl SynthSummary {
    pub fn clean_fraction(&self) -> f64 {
        self.fresh_clean as f64 / self.fresh as f64
    }
}

const RECENT: usize = 1024;

fn word(rng: &mut ChaCha8Rng) -> String {
    let len = rng.gen_range(3..=9);
    (0..len)
        .map(|_| rng.gen_range(b'a'..=b'z') as char)
        .collect()
}

fn sentence(rng: &mut ChaCha8Rng) -> Vec<String> {
    let n = rng.gen_range(6..=14);
    (0..n).map(|_| word(rng)).collect()
}

/// Generates `(source, target, is_clean, is_duplicate)` rows.
pub struct SynthRows {
    cfg: SynthConfig,
    rng: ChaCha8Rng,
    emitted: u64,
    recent: VecDeque<(String, String, bool)>,
}

impl SynthRows {
    pub fn new(cfg: SynthConfig) -> Self {
        SynthRows {
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            cfg,
            emitted: 0,
            recent: VecDeque::with_capacity(RECENT),
        }
    }
}

impl Iterator for SynthRows {
    type Item = (String, String, bool, bool);

    fn next(&mut self) -> Option<Self::Item> {
        if self.emitted == self.cfg.pairs {
            return None;
        }
        self.emitted += 1;
        let rng = &mut self.rng;
        if !self.recent.is_empty() && rng.gen_bool(self.cfg.duplicate_fraction) {
            let i = rng.gen_range(0..self.recent.len());
            let (s, t, clean) = self.recent[i].clone();
            let s = if rng.gen_bool(0.5) {
                s.replacen(' ', "  ", 1)
            } else {
                s
            };
            return Some((s, t, clean, true));
        }
        let src = sentence(rng);
        let clean = rng.gen_bool(self.cfg.clean_fraction);
        let tgt = if clean {
            let mut t = src.clone();
            let k = rng.gen_range(0..t.len());
            t[k] = word(rng);
            t
        } else {
            sentence(rng)
        };
        let (s, t) = (src.join(" "), tgt.join(" "));
        if self.recent.len() == RECENT {
            self.recent.pop_front();
        }
        self.recent.push_back((s.clone(), t.clone(), clean));
        Some((s, t, clean, false))
    }
}

/// Writes a two-column TSV corpus (ids are assigned at ingestion).
pub fn write_synthetic_tsv(path: &Path, cfg: SynthConfig) -> Result<SynthSummary> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::with_capacity(1 << 16, file);
    let mut summary = SynthSummary::default();
    for (s, t, clean, dup) in SynthRows::new(cfg) {
        writeln!(out, "{s}\t{t}").map_err(|e| Error::io(path, e))?;
        summary.written += 1;
        if dup {
            summary.duplicates += 1;
        } else {
            summary.fresh += 1;
            summary.fresh_clean += clean as u64;
        }
    }
    out.flush().map_err(|e| Error::io(path, e))?;
    Ok(summary)
}
