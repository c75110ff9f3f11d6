use std::collections::HashMap;

use log::warn;

use super::EvalSet;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Smoothing {
    None,
    /// Replace a zero match count with `epsilon` before taking the log.
    AddEpsilon(f64),
}

impl Default for Smoothing {
    fn default() -> Self {
        Smoothing::AddEpsilon(0.1)
    }
}

/// Corpus-level sufficient statistics.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BleuStats {
    pub hyp_len: usize,
    pub ref_len: usize,
    pub matches: Vec<usize>,
    pub totals: Vec<usize>,
}

fn ngram_counts<'a>(tokens: &'a [&'a str], n: usize) -> HashMap<&'a [&'a str], usize> {
    let mut counts = HashMap::new();
    for g in tokens.windows(n) {
        *counts.entry(g).or_insert(0) += 1;
    }
    counts
}

pub fn bleu_stats(set: &EvalSet, max_n: usize) -> BleuStats {
    let mut st = BleuStats {
        matches: vec![0; max_n],
        totals: vec![0; max_n],
        ..Default::default()
    };
    for item in set.items() {
        let hyp: Vec<&str> = item.hypothesis.split_whitespace().collect();
        let rf: Vec<&str> = item.reference.split_whitespace().collect();
        st.hyp_len += hyp.len();
        st.ref_len += rf.len();
        for n in 1..=max_n {
            if hyp.len() < n {
                break;
            }
            let h = ngram_counts(&hyp, n);
            let r = ngram_counts(&rf, n);
            st.totals[n - 1] += hyp.len() + 1 - n;
            st.matches[n - 1] += h
                .iter()
                .map(|(g, &c)| c.min(r.get(g).copied().unwrap_or(0)))
                .sum::<usize>();
        }
    }
    st
}

impl BleuStats {
    /// Score in `[0, 100]`.
    pub fn score(&self, smoothing: Smoothing) -> f64 {
        if self.hyp_len == 0 {
            warn!("BLEU: empty hypothesis corpus, scoring 0");
            return 0.0;
        }
        if self.matches.iter().all(|&m| m == 0) {
            return 0.0;
        }
        let bp = if self.hyp_len < self.ref_len {
            (1.0 - self.ref_len as f64 / self.hyp_len as f64).exp()
        } else {
            1.0
        };
        let mut log_sum = 0.0;
        let mut orders = 0;
        for (&m, &t) in self.matches.iter().zip(&self.totals) {
            // no hypothesis n-grams of this order anywhere: drop the order
            if t == 0 {
                break;
            }
            let p = if m > 0 {
                m as f64 / t as f64
            } else {
                match smoothing {
                    Smoothing::None => return 0.0,
                    Smoothing::AddEpsilon(eps) => eps / t as f64,
                }
            };
            log_sum += p.ln();
            orders += 1;
        }
        100.0 * bp * (log_sum / orders as f64).exp()
    }
}

/// Corpus BLEU over whitespace tokens: clipped n-gram matches summed across
/// segments, geometric mean of precisions for orders `1..=max_n`, times the
/// brevity penalty.
pub fn bleu_corpus(set: &EvalSet, max_n: usize, smoothing: Smoothing) -> f64 {
    bleu_stats(set, max_n).score(smoothing)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::EvalItem;

    fn set(items: &[(&str, &str)]) -> EvalSet {
        EvalSet::new(
            "t",
            items.iter().map(|(h, r)| EvalItem::new(*h, *r)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn identical_is_hundred() {
        let s = set(&[
            ("the cat sat on the mat", "the cat sat on the mat"),
            ("a b c d e", "a b c d e"),
        ]);
        assert_eq!(bleu_corpus(&s, 4, Smoothing::default()), 100.0);
        assert_eq!(bleu_corpus(&s, 4, Smoothing::None), 100.0);
    }

    #[test]
    fn zero_four_gram_matches_without_smoothing() {
        let s = set(&[("a b c d", "a b c e")]);
        assert_eq!(bleu_corpus(&s, 4, Smoothing::None), 0.0);
        assert!(bleu_corpus(&s, 4, Smoothing::default()) > 0.0);
    }

    #[test]
    fn clipping_and_brevity() {
        // "the the the" vs "the cat": unigram clipped to 1/3, no bigram match
        let st = bleu_stats(&set(&[("the the the", "the cat")]), 4);
        assert_eq!(st.matches, [1, 0, 0, 0]);
        assert_eq!(st.totals, [3, 2, 1, 0]);
        // hypothesis shorter than reference: bp = exp(1 - 4/2)
        let st = bleu_stats(&set(&[("a b", "a b c d")]), 2);
        let bp = (1.0f64 - 2.0).exp();
        assert!((st.score(Smoothing::None) - 100.0 * bp).abs() < 1e-9);
    }

    #[test]
    fn empty_hypotheses_score_zero() {
        let s = set(&[("", "a b c")]);
        assert_eq!(bleu_corpus(&s, 4, Smoothing::default()), 0.0);
    }

    #[test]
    fn short_segments_use_available_orders() {
        let s = set(&[("a b", "a b")]);
        assert_eq!(bleu_corpus(&s, 4, Smoothing::None), 100.0);
    }
}
