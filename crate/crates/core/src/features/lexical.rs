use std::sync::{Arc, OnceLock};

use super::{Family, FeatureBlock};
use crate::conversation::SessionTurns;
use crate::corpus::{Lexicon, Role};
use crate::error::{Error, Result};

pub const LEXICAL_FEATURES: usize = 6;

pub fn lexical_names() -> Arc<[String]> {
    static NAMES: OnceLock<Arc<[String]>> = OnceLock::new();
    NAMES
        .get_or_init(|| {
            [
                "L.pos_prop",
                "L.neg_prop",
                "L.log_pos_vs_partner_pos",
                "L.log_pos_vs_partner_neg",
                "L.log_neg_vs_partner_pos",
                "L.log_neg_vs_partner_neg",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect()
        })
        .clone()
}

/// Positive and negative emotion-word proportions of `role`, then the log
/// ratios of the speaker's to the partner's proportions. The ratios use
/// `(count + 0.5) / (words + 1)` so they stay finite.
pub fn extract_lexical(turns: &SessionTurns, lexicon: &Lexicon, role: Role) -> Result<FeatureBlock> {
    let n = turns.totals(role).words;
    if n == 0 {
        return Err(Error::Feature(format!("{role} has no words")));
    }
    let m = turns.totals(role.partner()).words;
    let (pos, neg) = lexicon.count(turns.words_of(role));
    let (ppos, pneg) = lexicon.count(turns.words_of(role.partner()));
    let smooth = |c: usize, total: usize| (c as f64 + 0.5) / (total as f64 + 1.0);
    let (sp, sn) = (smooth(pos, n), smooth(neg, n));
    let (pp, pn) = (smooth(ppos, m), smooth(pneg, m));
    let values = vec![
        pos as f64 / n as f64,
        neg as f64 / n as f64,
        (sp / pp).ln(),
        (sp / pn).ln(),
        (sn / pp).ln(),
        (sn / pn).ln(),
    ];
    FeatureBlock::new(Family::L, lexical_names(), values, Vec::new())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conversation::{build_turns, DEFAULT_MERGE_GAP};
    use crate::corpus::{parse_lexicon_str, Segment, SegmentSet, Word, WordAlignment};
    use crate::time::Millis;
    use std::path::Path;

    fn lexicon() -> Lexicon {
        parse_lexicon_str("happ*,Positive\ngood,Positive\nsad,Negative\nhate,Negative\n", Path::new("lex")).unwrap()
    }

    // speaker words inside [0, 100 s), partner words inside [100, 200 s)
    fn session(h: &[&str], w: &[&str]) -> SessionTurns {
        let segs = SegmentSet::new(vec![
            Segment::new(Millis(0), Millis(100_000), "H"),
            Segment::new(Millis(100_000), Millis(100_000), "W"),
        ]);
        let mut words = Vec::new();
        for (base, toks) in [(0, h), (100_000, w)] {
            for (i, t) in toks.iter().enumerate() {
                words.push(Word {
                    start: Millis(base + 1000 * i as i64),
                    dur: Millis(100),
                    token: t.to_string(),
                    confidence: 1.0,
                });
            }
        }
        build_turns(&segs, &WordAlignment::new(words), DEFAULT_MERGE_GAP).unwrap()
    }

    #[test]
    fn smoothed_log_ratios() {
        let mut h = vec!["happy", "happiness", "good", "sad"];
        h.extend(std::iter::repeat("the").take(16));
        let mut w = vec!["good", "happy", "hate", "sad"];
        w.extend(std::iter::repeat("a").take(6));
        let f = extract_lexical(&session(&h, &w), &lexicon(), Role::Husband).unwrap();
        assert!((f.values[0] - 0.15).abs() < 1e-15);
        assert!((f.values[1] - 0.05).abs() < 1e-15);
        let expected = ((1.5f64 / 21.0) / (2.5 / 11.0)).ln();
        assert!((f.values[4] - expected).abs() < 1e-12);
        assert!((f.values[4] + 1.157).abs() < 1e-3);
        assert!((f.values[2] - ((3.5f64 / 21.0) / (2.5 / 11.0)).ln()).abs() < 1e-12);
    }

    #[test]
    fn identical_speakers_give_zero_ratios() {
        let toks = ["happy", "sad", "x", "y"];
        let f = extract_lexical(&session(&toks, &toks), &lexicon(), Role::Wife).unwrap();
        assert_eq!(f.values[2], 0.0);
        assert_eq!(f.values[5], 0.0);
    }

    #[test]
    fn no_matches_stay_finite() {
        let f = extract_lexical(&session(&["x", "y"], &["z"]), &lexicon(), Role::Husband).unwrap();
        assert_eq!(&f.values[..2], &[0.0, 0.0]);
        assert!(f.values.iter().all(|v| v.is_finite()));
        assert!(extract_lexical(&session(&[], &["z"]), &lexicon(), Role::Husband).is_err());
    }
}
