use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{group_by_session, normalize_token, Word, WordAlignment};
use crate::error::{Error, Result};
use crate::time::Millis;

/// Reads a CTM file: `<sess> <chan> <start> <dur> <token> [conf]`.
///
/// Tokens are normalized with [`normalize_token`]; a missing confidence
/// defaults to 1.0.
pub fn parse_ctm(path: &Path) -> Result<BTreeMap<String, WordAlignment>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_ctm_str(&text, path)
}

pub fn parse_ctm_str(text: &str, origin: &Path) -> Result<BTreeMap<String, WordAlignment>> {
    let mut items = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with(";;") || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 5 && fields.len() != 6 {
            return Err(Error::parse(
                origin,
                lineno,
                format!("expected 5 or 6 fields in CTM line, found {}", fields.len()),
            ));
        }
        let start = Millis::parse_secs(fields[2])
            .ok_or_else(|| Error::parse(origin, lineno, format!("non-numeric start time `{}`", fields[2])))?;
        let dur = Millis::parse_secs(fields[3])
            .ok_or_else(|| Error::parse(origin, lineno, format!("non-numeric duration `{}`", fields[3])))?;
        if start < Millis::ZERO {
            return Err(Error::parse(origin, lineno, "negative start time"));
        }
        if dur < Millis::ZERO {
            return Err(Error::parse(origin, lineno, "negative duration"));
        }
        let token = normalize_token(fields[4]);
        if token.is_empty() {
            return Err(Error::parse(origin, lineno, format!("token `{}` is empty after normalization", fields[4])));
        }
        let confidence = match fields.get(5) {
            None => 1.0,
            Some(raw) => {
                let c: f64 =
                    raw.parse().map_err(|_| Error::parse(origin, lineno, format!("non-numeric confidence `{raw}`")))?;
                if !(0.0..=1.0).contains(&c) {
                    return Err(Error::parse(origin, lineno, format!("confidence {c} outside [0, 1]")));
                }
                c
            }
        };
        items.push((fields[0].to_string(), Word { start, dur, token, confidence }));
    }
    Ok(group_by_session(items).into_iter().map(|(k, v)| (k, WordAlignment::new(v))).collect())
}

pub fn write_ctm(session_id: &str, words: &WordAlignment) -> String {
    let mut out = String::new();
    for w in &words.words {
        let _ = writeln!(out, "{session_id} 1 {} {} {} {:.2}", w.start, w.dur, w.token, w.confidence);
    }
    out
}
