use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{group_by_session, Segment, SegmentSet};
use crate::error::{Error, Result};
use crate::time::Millis;

/// Reads an RTTM file into per-session segment sets.
///
/// Only `SPEAKER` records are kept; other record types, blank lines and
/// `;;` / `#` comments are skipped.
pub fn parse_rttm(path: &Path) -> Result<BTreeMap<String, SegmentSet>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_rttm_str(&text, path)
}

pub fn parse_rttm_str(text: &str, origin: &Path) -> Result<BTreeMap<String, SegmentSet>> {
    let mut items = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with(";;") || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 10 {
            return Err(Error::parse(
                origin,
                lineno,
                format!("expected 10 fields in RTTM line, found {}", fields.len()),
            ));
        }
        if fields[0] != "SPEAKER" {
            continue;
        }
        let start = Millis::parse_secs(fields[3])
            .ok_or_else(|| Error::parse(origin, lineno, format!("non-numeric start time `{}`", fields[3])))?;
        let dur = Millis::parse_secs(fields[4])
            .ok_or_else(|| Error::parse(origin, lineno, format!("non-numeric duration `{}`", fields[4])))?;
        if start < Millis::ZERO {
            return Err(Error::parse(origin, lineno, "negative start time"));
        }
        if dur <= Millis::ZERO {
            return Err(Error::parse(origin, lineno, "duration must be positive"));
        }
        items.push((fields[1].to_string(), Segment::new(start, dur, fields[7])));
    }
    Ok(group_by_session(items).into_iter().map(|(k, v)| (k, SegmentSet::new(v))).collect())
}

pub fn write_rttm(session_id: &str, segments: &SegmentSet) -> String {
    let mut out = String::new();
    for s in segments.segments() {
        let _ = writeln!(out, "SPEAKER {session_id} 1 {} {} <NA> <NA> {} <NA> <NA>", s.start, s.dur, s.tag);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn origin() -> &'static Path {
        Path::new("test.rttm")
    }

    #[test]
    fn single_line() {
        let map = parse_rttm_str("SPEAKER s1 1 0.50 1.20 <NA> <NA> S1 <NA> <NA>\n", origin()).unwrap();
        let set = &map["s1"];
        assert_eq!(set.segments(), &[Segment::new(Millis(500), Millis(1200), "S1")]);
    }

    #[test]
    fn overlapping_segments_are_kept_and_flagged() {
        let text = "SPEAKER s1 1 0.00 2.00 <NA> <NA> A <NA> <NA>\n\
                    SPEAKER s1 1 1.50 1.00 <NA> <NA> B <NA> <NA>\n";
        let set = &parse_rttm_str(text, origin()).unwrap()["s1"];
        assert_eq!(set.len(), 2);
        assert_eq!(set.overlaps(), vec![(0, 1)]);
    }

    #[test]
    fn eight_fields_is_an_error_naming_the_line() {
        let text = "SPEAKER s1 1 0.0 1.0 <NA> <NA> A <NA> <NA>\nSPEAKER s1 1 0.50 1.20 <NA> <NA> S1\n";
        let err = parse_rttm_str(text, origin()).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn non_numeric_time() {
        let err = parse_rttm_str("SPEAKER s1 1 zero 1.0 <NA> <NA> A <NA> <NA>", origin()).unwrap_err();
        assert!(err.to_string().contains("non-numeric start"));
    }

    #[test]
    fn groups_and_sorts_sessions() {
        let text = "SPEAKER b 1 3.0 1.0 <NA> <NA> A <NA> <NA>\n\
                    SPEAKER a 1 2.0 1.0 <NA> <NA> A <NA> <NA>\n\
                    SPEAKER b 1 1.0 1.0 <NA> <NA> B <NA> <NA>\n";
        let map = parse_rttm_str(text, origin()).unwrap();
        assert_eq!(map.keys().collect::<Vec<_>>(), vec!["a", "b"]);
        assert_eq!(map["b"].segments()[0].start, Millis(1000));
    }

    proptest! {
        #[test]
        fn rttm_round_trip(segs in prop::collection::vec((0i64..600_000, 1i64..20_000, 0usize..3), 0..40)) {
            let tags = ["H", "W", "spk3"];
            let set = SegmentSet::new(
                segs.iter().map(|&(s, d, t)| Segment::new(Millis(s), Millis(d), tags[t])).collect(),
            );
            let text = write_rttm("sess", &set);
            let back = parse_rttm_str(&text, origin()).unwrap();
            let parsed = back.get("sess").cloned().unwrap_or_default();
            prop_assert_eq!(parsed, set);
        }
    }
}
