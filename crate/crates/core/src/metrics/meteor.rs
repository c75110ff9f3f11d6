//! Exact-match METEOR: unigram alignment without stemming or synonyms,
//! harmonic mean weighted toward recall, fragmentation penalty over chunks.

use super::EvalSet;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeteorParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for MeteorParams {
    fn default() -> Self {
        MeteorParams {
            alpha: 0.9,
            beta: 3.0,
            gamma: 0.5,
        }
    }
}

/// Leftmost-greedy alignment: each hypothesis token, in order, takes the
/// leftmost unused identical reference token. Returns `(hyp_idx, ref_idx)`
/// sorted by hypothesis index.
pub fn align_greedy(hyp: &[&str], rf: &[&str]) -> Vec<(usize, usize)> {
    let mut used = vec![false; rf.len()];
    let mut out = Vec::new();
    for (i, h) in hyp.iter().enumerate() {
        if let Some(j) = (0..rf.len()).find(|&j| !used[j] && rf[j] == *h) {
            used[j] = true;
            out.push((i, j));
        }
    }
    out
}

/// Number of maximal runs of alignments that are adjacent in both the
/// hypothesis and the reference. Expects input sorted by hypothesis index.
pub fn count_chunks(alignment: &[(usize, usize)]) -> usize {
    if alignment.is_empty() {
        return 0;
    }
    1 + alignment
        .windows(2)
        .filter(|w| !(w[1].0 == w[0].0 + 1 && w[1].1 == w[0].1 + 1))
        .count()
}

/// Segment score in `[0, 1]`.
pub fn meteor_segment(hypothesis: &str, reference: &str, params: MeteorParams) -> f64 {
    let hyp: Vec<&str> = hypothesis.split_whitespace().collect();
    let rf: Vec<&str> = reference.split_whitespace().collect();
    let alignment = align_greedy(&hyp, &rf);
    let m = alignment.len();
    if m == 0 {
        return 0.0;
    }
    let p = m as f64 / hyp.len() as f64;
    let r = m as f64 / rf.len() as f64;
    let f_mean = p * r / (params.alpha * p + (1.0 - params.alpha) * r);
    let frag = count_chunks(&alignment) as f64 / m as f64;
    let penalty = params.gamma * frag.powf(params.beta);
    f_mean * (1.0 - penalty)
}

/// Mean segment score, scaled to `[0, 100]`.
pub fn meteor_simple(set: &EvalSet, params: MeteorParams) -> f64 {
    let total: f64 = set
        .items()
        .iter()
        .map(|it| meteor_segment(&it.hypothesis, &it.reference, params))
        .sum();
    100.0 * total / set.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_identical_tokens() {
        let s = "a b c d e f g h i j";
        let got = 100.0 * meteor_segment(s, s, MeteorParams::default());
        assert!((got - 99.95).abs() < 0.01, "{got}");
        assert!((got - 100.0 * (1.0 - 0.5 / 1000.0)).abs() < 1e-9);
    }

    #[test]
    fn swapped_pair_is_fifty() {
        assert_eq!(
            100.0 * meteor_segment("b a", "a b", MeteorParams::default()),
            50.0
        );
        assert_eq!(align_greedy(&["b", "a"], &["a", "b"]), [(0, 1), (1, 0)]);
    }

    #[test]
    fn no_common_tokens() {
        assert_eq!(meteor_segment("x y", "a b", MeteorParams::default()), 0.0);
        assert_eq!(meteor_segment("", "a b", MeteorParams::default()), 0.0);
    }

    #[test]
    fn chunks_break_on_unaligned_gap() {
        // "a x b" vs "a b": a->0, b->1 are adjacent in the reference but not
        // in the hypothesis
        let al = align_greedy(&["a", "x", "b"], &["a", "b"]);
        assert_eq!(al, [(0, 0), (2, 1)]);
        assert_eq!(count_chunks(&al), 2);
    }

    #[test]
    fn recall_weighted_mean() {
        // m = 2, |hyp| = 2, |ref| = 4: P = 1, R = 0.5, one chunk
        let got = meteor_segment("a b", "a b c d", MeteorParams::default());
        let f = 0.5 / (0.9 + 0.1 * 0.5);
        let expected = f * (1.0 - 0.5 * (0.5f64).powi(3));
        assert!((got - expected).abs() < 1e-12);
    }
}
