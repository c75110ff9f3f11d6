use std::collections::HashMap;
use std::hash::Hash;

use log::warn;

use super::EvalSet;

/// Per-order `(hyp_count, ref_count, matches)` for one segment, character
/// orders first, then word orders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChrfStats {
    pub orders: Vec<(usize, usize, usize)>,
}

fn count_ngrams<K: Hash + Eq>(xs: &[K], n: usize) -> HashMap<&[K], usize> {
    let mut m = HashMap::new();
    for g in xs.windows(n) {
        *m.entry(g).or_insert(0) += 1;
    }
    m
}

fn match_counts<K: Hash + Eq>(hyp: &[K], rf: &[K], n: usize) -> (usize, usize, usize) {
    let (h, r) = (count_ngrams(hyp, n), count_ngrams(rf, n));
    let matches = h
        .iter()
        .map(|(g, &c)| c.min(r.get(g).copied().unwrap_or(0)))
        .sum();
    (
        hyp.len().saturating_sub(n - 1),
        rf.len().saturating_sub(n - 1),
        matches,
    )
}

impl ChrfStats {
    pub fn of(hypothesis: &str, reference: &str, char_n: usize, word_n: usize) -> Self {
        let hc: Vec<char> = hypothesis.chars().filter(|c| !c.is_whitespace()).collect();
        let rc: Vec<char> = reference.chars().filter(|c| !c.is_whitespace()).collect();
        let mut orders: Vec<_> = (1..=char_n).map(|n| match_counts(&hc, &rc, n)).collect();
        if word_n > 0 {
            let hw: Vec<&str> = hypothesis.split_whitespace().collect();
            let rw: Vec<&str> = reference.split_whitespace().collect();
            orders.extend((1..=word_n).map(|n| match_counts(&hw, &rw, n)));
        }
        ChrfStats { orders }
    }

    /// Precision and recall averaged over the orders present on both sides.
    pub fn mean_precision_recall(&self) -> (f64, f64) {
        let (mut p, mut r, mut k) = (0.0, 0.0, 0usize);
        for &(h, rf, m) in &self.orders {
            if h > 0 && rf > 0 {
                p += m as f64 / h as f64;
                r += m as f64 / rf as f64;
                k += 1;
            }
        }
        if k == 0 {
            (0.0, 0.0)
        } else {
            (p / k as f64, r / k as f64)
        }
    }

    /// F-beta of the mean precision and recall, in `[0, 1]`.
    pub fn f_score(&self, beta: f64) -> f64 {
        let (p, r) = self.mean_precision_recall();
        if p + r == 0.0 {
            return 0.0;
        }
        let b2 = beta * beta;
        (1.0 + b2) * p * r / (b2 * p + r)
    }
}

/// Segment-averaged chrF in `[0, 100]`. `word_n > 0` adds word n-gram orders
/// (chrF++ uses 2).
pub fn chrf(set: &EvalSet, char_n: usize, beta: f64, word_n: usize) -> f64 {
    let total: f64 = set
        .items()
        .iter()
        .map(|it| {
            if it.hypothesis.is_empty() && it.reference.is_empty() {
                warn!("chrF: empty hypothesis and reference, segment scores 0");
                return 0.0;
            }
            ChrfStats::of(&it.hypothesis, &it.reference, char_n, word_n).f_score(beta)
        })
        .sum();
    100.0 * total / set.len() as f64
}

/// chrF++: six character orders plus word unigrams and bigrams, beta 2.
pub fn chrf_pp(set: &EvalSet) -> f64 {
    chrf(set, 6, 2.0, 2)
}
