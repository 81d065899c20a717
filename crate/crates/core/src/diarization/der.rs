use std::collections::BTreeMap;

use serde::Serialize;

use crate::corpus::SegmentSet;
use crate::error::{Error, Result};
use crate::time::Millis;

pub const DEFAULT_COLLAR: Millis = Millis(250);

/// Time-weighted diarization error components, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerBreakdown {
    pub scored_speech: f64,
    pub missed: f64,
    pub false_alarm: f64,
    pub confusion: f64,
}

impl DerBreakdown {
    pub fn der(&self) -> f64 {
        (self.missed + self.false_alarm + self.confusion) / self.scored_speech
    }
}

/// Diarization error rate of `hypothesis` against `reference`.
///
/// Regions within `collar` of any reference boundary are not scored.
/// Overlapped reference speech counts once per active speaker. Hypothesis
/// labels are mapped onto reference labels by the one-to-one assignment
/// that maximizes matched time.
pub fn diarization_error_rate(hypothesis: &SegmentSet, reference: &SegmentSet, collar: Millis) -> Result<DerBreakdown> {
    if reference.is_empty() {
        return Err(Error::Diarization("empty reference".into()));
    }
    let ref_tags: Vec<&str> = reference.tags();
    let hyp_tags: Vec<&str> = hypothesis.tags();
    let ref_idx: BTreeMap<&str, usize> = ref_tags.iter().enumerate().map(|(i, t)| (*t, i)).collect();
    let hyp_idx: BTreeMap<&str, usize> = hyp_tags.iter().enumerate().map(|(i, t)| (*t, i)).collect();

    let mut cuts: Vec<i64> = Vec::new();
    let mut no_score: Vec<(i64, i64)> = Vec::new();
    for s in reference.segments() {
        cuts.extend([s.start.0, s.end().0]);
        for b in [s.start.0, s.end().0] {
            if collar.0 > 0 {
                no_score.push((b - collar.0, b + collar.0));
                cuts.extend([b - collar.0, b + collar.0]);
            }
        }
    }
    for s in hypothesis.segments() {
        cuts.extend([s.start.0, s.end().0]);
    }
    cuts.sort_unstable();
    cuts.dedup();

    let mut total_ref = 0i64;
    let mut missed = 0i64;
    let mut false_alarm = 0i64;
    let mut overlap_min = 0i64;
    let mut coincidence = vec![vec![0i64; hyp_tags.len()]; ref_tags.len()];
    let mut ref_active = vec![false; ref_tags.len()];
    let mut hyp_active = vec![false; hyp_tags.len()];

    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let dur = b - a;
        let mid2 = a + b; // doubled midpoint
        if no_score.iter().any(|&(lo, hi)| 2 * lo <= mid2 && mid2 <= 2 * hi) {
            continue;
        }
        ref_active.iter_mut().for_each(|x| *x = false);
        hyp_active.iter_mut().for_each(|x| *x = false);
        for s in reference.segments() {
            if 2 * s.start.0 <= mid2 && mid2 < 2 * s.end().0 {
                ref_active[ref_idx[s.tag.as_str()]] = true;
            }
        }
        for s in hypothesis.segments() {
            if 2 * s.start.0 <= mid2 && mid2 < 2 * s.end().0 {
                hyp_active[hyp_idx[s.tag.as_str()]] = true;
            }
        }
        let n_ref = ref_active.iter().filter(|&&x| x).count() as i64;
        let n_hyp = hyp_active.iter().filter(|&&x| x).count() as i64;
        total_ref += dur * n_ref;
        missed += dur * (n_ref - n_hyp).max(0);
        false_alarm += dur * (n_hyp - n_ref).max(0);
        overlap_min += dur * n_ref.min(n_hyp);
        for (r, &ra) in ref_active.iter().enumerate() {
            if !ra {
                continue;
            }
            for (h, &ha) in hyp_active.iter().enumerate() {
                if ha {
                    coincidence[r][h] += dur;
                }
            }
        }
    }
    if total_ref == 0 {
        return Err(Error::Diarization("reference has no scorable speech after the collar".into()));
    }
    let matched = best_assignment(&coincidence);
    let ms = |x: i64| x as f64 / 1000.0;
    Ok(DerBreakdown {
        scored_speech: ms(total_ref),
        missed: ms(missed),
        false_alarm: ms(false_alarm),
        confusion: ms(overlap_min - matched),
    })
}

// Maximum total weight of a one-to-one matching between reference rows and
// hypothesis columns, by exhaustive search (label sets are tiny).
fn best_assignment(weights: &[Vec<i64>]) -> i64 {
    fn go(weights: &[Vec<i64>], row: usize, used: &mut Vec<bool>) -> i64 {
        if row == weights.len() {
            return 0;
        }
        let mut best = go(weights, row + 1, used);
        for c in 0..used.len() {
            if !used[c] {
                used[c] = true;
                best = best.max(weights[row][c] + go(weights, row + 1, used));
                used[c] = false;
            }
        }
        best
    }
    let cols = weights.first().map_or(0, Vec::len);
    go(weights, 0, &mut vec![false; cols])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Segment;

    fn set(segs: &[(i64, i64, &str)]) -> SegmentSet {
        SegmentSet::new(segs.iter().map(|&(s, d, t)| Segment::new(Millis(s), Millis(d), t)).collect())
    }

    #[test]
    fn identity_is_zero() {
        let r = set(&[(0, 2000, "A"), (2500, 3000, "B"), (6000, 1000, "A")]);
        assert_eq!(diarization_error_rate(&r, &r, DEFAULT_COLLAR).unwrap().der(), 0.0);
        assert_eq!(diarization_error_rate(&r, &r, Millis(0)).unwrap().der(), 0.0);
    }

    #[test]
    fn global_swap_is_zero() {
        let r = set(&[(0, 2000, "A"), (2500, 3000, "B")]);
        let h = set(&[(0, 2000, "S2"), (2500, 3000, "S1")]);
        assert_eq!(diarization_error_rate(&h, &r, Millis(0)).unwrap().der(), 0.0);
    }

    #[test]
    fn truncated_hypothesis() {
        let r = set(&[(0, 10_000, "A")]);
        let h = set(&[(0, 8_000, "S1")]);
        let no_collar = diarization_error_rate(&h, &r, Millis(0)).unwrap();
        assert!((no_collar.der() - 0.2).abs() < 1e-12);
        assert!((no_collar.missed - 2.0).abs() < 1e-12);
        // collar removes [-0.25, 0.25] and [9.75, 10.25]: missed 1.75 of 9.5 scored
        let collared = diarization_error_rate(&h, &r, DEFAULT_COLLAR).unwrap();
        assert!((collared.scored_speech - 9.5).abs() < 1e-12);
        assert!((collared.der() - 1.75 / 9.5).abs() < 1e-12);
    }

    #[test]
    fn confusion_and_false_alarm() {
        let r = set(&[(0, 4000, "A"), (4000, 4000, "B")]);
        // first half right, second half labelled as A's cluster, plus 1 s of extra speech
        let h = set(&[(0, 8000, "X"), (9000, 1000, "Y")]);
        let d = diarization_error_rate(&h, &r, Millis(0)).unwrap();
        assert!((d.confusion - 4.0).abs() < 1e-12);
        assert!((d.false_alarm - 1.0).abs() < 1e-12);
        assert!((d.der() - 5.0 / 8.0).abs() < 1e-12);
    }

    #[test]
    fn overlap_scored_against_both() {
        let r = set(&[(0, 4000, "A"), (2000, 4000, "B")]);
        let h = set(&[(0, 4000, "S1"), (4000, 2000, "S2")]);
        let d = diarization_error_rate(&h, &r, Millis(0)).unwrap();
        assert!((d.scored_speech - 8.0).abs() < 1e-12);
        assert!((d.missed - 2.0).abs() < 1e-12);
    }

    #[test]
    fn empty_reference_rejected() {
        assert!(diarization_error_rate(&set(&[(0, 10, "A")]), &SegmentSet::default(), Millis(0)).is_err());
    }
}
