use std::fmt::Write as _;

use serde_json::{json, Value};

use crate::model::{CorpusStats, HISTOGRAM_BINS};

/// Rendered run summary; `text` and `json` carry the same numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub text: String,
    pub json: Value,
}

/// Percentage rounded to one decimal, or `None` when the base is zero.
fn pct(part: u64, whole: u64) -> Option<f64> {
    (whole > 0).then(|| (part as f64 * 1000.0 / whole as f64).round() / 10.0)
}

fn bin_edges(i: usize) -> (f64, f64) {
    let w = 1.0 / HISTOGRAM_BINS as f64;
    (
        (i as f64 * w * 100.0).round() / 100.0,
        ((i + 1) as f64 * w * 100.0).round() / 100.0,
    )
}

pub fn report(stats: &CorpusStats) -> Report {
    let dup_pct = pct(stats.duplicates_removed, stats.total_read);
    let kept_pct = pct(stats.retained, stats.scored);
    let rej_pct = pct(stats.rejected, stats.scored);

    let mut t = String::new();
    let _ = writeln!(t, "total read          {}", stats.total_read);
    let _ = writeln!(t, "malformed skipped   {}", stats.skipped_malformed);
    match dup_pct {
        Some(p) => {
            let _ = writeln!(
                t,
                "duplicates removed  {} ({p:.1}% of read)",
                stats.duplicates_removed
            );
        }
        None => {
            let _ = writeln!(t, "duplicates removed  {}", stats.duplicates_removed);
        }
    }
    let _ = writeln!(t, "scored              {}", stats.scored);
    let _ = writeln!(t, "unscored            {}", stats.unscored);

    let mut bins = Vec::new();
    match (kept_pct, rej_pct) {
        (Some(k), Some(r)) => {
            let _ = writeln!(
                t,
                "retained {k:.1}% ({} of {} scored)",
                stats.retained, stats.scored
            );
            let _ = writeln!(
                t,
                "rejected {r:.1}% ({} of {} scored)",
                stats.rejected, stats.scored
            );
            let _ = writeln!(t, "score histogram:");
            for (i, &count) in stats.score_histogram.iter().enumerate() {
                let (lo, hi) = bin_edges(i);
                let close = if i + 1 == HISTOGRAM_BINS { ']' } else { ')' };
                let _ = writeln!(t, "  [{lo:.2}, {hi:.2}{close}  {count}");
                bins.push(json!({ "lo": lo, "hi": hi, "count": count }));
            }
            let _ = writeln!(
                t,
                "histogram total     {}",
                stats.score_histogram.iter().sum::<u64>()
            );
        }
        _ => {
            let _ = writeln!(t, "no pairs scored");
        }
    }

    let json = json!({
        "total_read": stats.total_read,
        "skipped_malformed": stats.skipped_malformed,
        "duplicates_removed": stats.duplicates_removed,
        "duplicates_removed_pct": dup_pct,
        "scored": stats.scored,
        "unscored": stats.unscored,
        "retained": stats.retained,
        "retained_pct": kept_pct,
        "rejected": stats.rejected,
        "rejected_pct": rej_pct,
        "score_histogram": bins,
    });
    Report { text: t, json }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stats(scores: &[(f64, bool)]) -> CorpusStats {
        let mut s = CorpusStats {
            total_read: scores.len() as u64 + 1,
            duplicates_removed: 1,
            ..Default::default()
        };
        for &(x, k) in scores {
            s.record_scored(x, k);
        }
        s
    }

    #[test]
    fn nothing_scored() {
        let r = report(&CorpusStats::default());
        assert!(r.text.contains("no pairs scored"));
        assert_eq!(r.json["score_histogram"].as_array().unwrap().len(), 0);
        assert!(r.json["retained_pct"].is_null());
    }

    #[test]
    fn half_retained() {
        let r = report(&stats(&[(0.9, true), (0.2, false)]));
        assert!(r.text.contains("retained 50.0%"), "{}", r.text);
        assert_eq!(r.json["retained_pct"], 50.0);
    }

    #[test]
    fn text_and_json_agree() {
        let s = stats(&[
            (0.9, true),
            (0.71, true),
            (0.2, false),
            (1.0, true),
            (0.05, false),
            (0.7, true),
        ]);
        let r = report(&s);
        let hist = r.json["score_histogram"].as_array().unwrap();
        let total: u64 = hist.iter().map(|b| b["count"].as_u64().unwrap()).sum();
        assert_eq!(total, s.scored);
        assert!(r
            .text
            .contains(&format!("histogram total     {}", s.scored)));
        for (line, bin) in r.text.lines().filter(|l| l.starts_with("  [")).zip(hist) {
            let count: u64 = line.split_whitespace().last().unwrap().parse().unwrap();
            assert_eq!(count, bin["count"].as_u64().unwrap());
        }
        let kept = r.json["retained_pct"].as_f64().unwrap();
        assert!(r.text.contains(&format!("retained {kept:.1}%")));
        let dup = r.json["duplicates_removed_pct"].as_f64().unwrap();
        assert!(r.text.contains(&format!("({dup:.1}% of read)")));
        assert!(r.text.contains("[0.95, 1.00]  1"));
    }
}
