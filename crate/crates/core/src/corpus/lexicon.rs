use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Emotion {
    Positive,
    Negative,
}

impl FromStr for Emotion {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "Positive" => Ok(Emotion::Positive),
            "Negative" => Ok(Emotion::Negative),
            other => Err(format!("unknown category `{other}`")),
        }
    }
}

impl Emotion {
    pub fn as_str(self) -> &'static str {
        match self {
            Emotion::Positive => "Positive",
            Emotion::Negative => "Negative",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexiconEntry {
    pub pattern: String,
    pub category: Emotion,
}

/// Emotion-word lexicon with exact words and `*`-terminated stems.
///
/// Exact entries take precedence; among stems the longest matching prefix
/// wins.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    entries: Vec<LexiconEntry>,
    exact: HashMap<String, Emotion>,
    // longest first
    stems: Vec<(String, Emotion)>,
}

impl Lexicon {
    pub fn new(entries: Vec<LexiconEntry>) -> Result<Self> {
        let mut exact = HashMap::new();
        let mut stems = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for e in &entries {
            if !seen.insert(e.pattern.clone()) {
                return Err(Error::InvalidArgument(format!("duplicate pattern `{}`", e.pattern)));
            }
            let stars = e.pattern.matches('*').count();
            match stars {
                0 => {
                    exact.insert(e.pattern.clone(), e.category);
                }
                1 if e.pattern.ends_with('*') && e.pattern.len() > 1 => {
                    stems.push((e.pattern.trim_end_matches('*').to_string(), e.category));
                }
                _ => {
                    return Err(Error::InvalidArgument(format!(
                        "pattern `{}` must be a word or a stem with one trailing `*`",
                        e.pattern
                    )))
                }
            }
        }
        stems.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));
        Ok(Self { entries, exact, stems })
    }

    pub fn entries(&self) -> &[LexiconEntry] {
        &self.entries
    }

    pub fn lookup(&self, token: &str) -> Option<Emotion> {
        if let Some(&c) = self.exact.get(token) {
            return Some(c);
        }
        self.stems.iter().find(|(stem, _)| token.starts_with(stem.as_str())).map(|&(_, c)| c)
    }

    /// `(positive, negative)` match counts over `tokens`.
    pub fn count<'a, I: IntoIterator<Item = &'a str>>(&self, tokens: I) -> (usize, usize) {
        let mut pos = 0;
        let mut neg = 0;
        for t in tokens {
            match self.lookup(t) {
                Some(Emotion::Positive) => pos += 1,
                Some(Emotion::Negative) => neg += 1,
                None => {}
            }
        }
        (pos, neg)
    }
}

pub fn parse_lexicon(path: &Path) -> Result<Lexicon> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_lexicon_str(&text, path)
}

/// Lines of `<pattern>,<Positive|Negative>`; `#` starts a comment line.
pub fn parse_lexicon_str(text: &str, origin: &Path) -> Result<Lexicon> {
    let mut entries = Vec::new();
    let mut seen = HashMap::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (pattern, category) =
            trimmed.split_once(',').ok_or_else(|| Error::parse(origin, lineno, "expected `<pattern>,<category>`"))?;
        let pattern = pattern.trim().to_lowercase();
        let category: Emotion = category.trim().parse().map_err(|e: String| Error::parse(origin, lineno, e))?;
        if let Some(first) = seen.insert(pattern.clone(), lineno) {
            return Err(Error::parse(origin, lineno, format!("duplicate pattern `{pattern}` (first on line {first})")));
        }
        entries.push(LexiconEntry { pattern, category });
    }
    Lexicon::new(entries).map_err(|e| Error::parse(origin, 0, e.to_string()))
}

pub fn write_lexicon(lexicon: &Lexicon) -> String {
    let mut out = String::new();
    for e in lexicon.entries() {
        let _ = writeln!(out, "{},{}", e.pattern, e.category.as_str());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn origin() -> &'static Path {
        Path::new("lexicon.csv")
    }

    #[test]
    fn stem_and_exact_rules() {
        let lex = parse_lexicon_str("happ*,Positive\nsad,Negative\n", origin()).unwrap();
        assert_eq!(lex.lookup("happy"), Some(Emotion::Positive));
        assert_eq!(lex.lookup("happiness"), Some(Emotion::Positive));
        assert_eq!(lex.lookup("sad"), Some(Emotion::Negative));
        assert_eq!(lex.lookup("sadness"), None);
        assert_eq!(lex.count(["happy", "sad", "table", "happ"]), (2, 1));
    }

    #[test]
    fn unknown_category() {
        let err = parse_lexicon_str("sad,Neg\n", origin()).unwrap_err();
        assert!(err.to_string().contains("unknown category"), "{err}");
    }

    #[test]
    fn duplicate_pattern() {
        let err = parse_lexicon_str("sad,Negative\nSad,Negative\n", origin()).unwrap_err();
        assert!(err.to_string().contains("duplicate pattern"));
    }

    #[test]
    fn malformed_stems() {
        assert!(parse_lexicon_str("ha*p,Positive\n", origin()).is_err());
        assert!(parse_lexicon_str("hap**,Positive\n", origin()).is_err());
    }

    #[test]
    fn exact_beats_stem_and_longest_stem_wins() {
        let lex = parse_lexicon_str("good*,Positive\ngoodbye*,Negative\ngoodness,Negative\n", origin()).unwrap();
        assert_eq!(lex.lookup("goodbyes"), Some(Emotion::Negative));
        assert_eq!(lex.lookup("goodie"), Some(Emotion::Positive));
        assert_eq!(lex.lookup("goodness"), Some(Emotion::Negative));
    }
}
