//! Session-level features per speaker, in four families:
//!
//! * `A` acoustic: six functionals of every frame channel over the
//!   speaker's segments, `6 * D` values.
//! * `E` behavior: 26 configurations of a 128-d hidden vector followed by
//!   the same 26 configurations of a 5-d score vector, 3458 values.
//! * `L` lexical: emotion-word proportions and speaker/partner log-ratios,
//!   6 values.
//! * `T` turn-taking: 6 per-turn sequences, each with first and second
//!   differences, summarized by 9 functionals, plus 5 session totals,
//!   167 values.
//!
//! Fused vectors always run in family order `A`, `E`, `L`, `T`.

mod acoustic;
mod behavior;
pub mod functionals;
mod lexical;
mod table;
mod turn_taking;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::corpus::Role;
use crate::error::{Error, Result};

pub use acoustic::extract_acoustic;
pub use behavior::{behavior_names, extract_behavior, extract_behavior_from_dir, BEHAVIOR_FEATURES};
pub use lexical::{extract_lexical, lexical_names, LEXICAL_FEATURES};
pub use table::{FeatureRow, FeatureTable};
pub use turn_taking::{extract_turn_taking, turn_taking_names, TURN_SEQUENCES, TURN_TAKING_FEATURES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Family {
    A,
    E,
    L,
    T,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::A, Family::E, Family::L, Family::T];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::A => "A",
            Family::E => "E",
            Family::L => "L",
            Family::T => "T",
        }
    }

    /// Family of a registry name such as `A.F0.mean`.
    pub fn of_name(name: &str) -> Option<Family> {
        name.split('.').next().and_then(|p| p.parse().ok())
    }

    /// Parses `"A,E,T"` or `"A+E+T"` into a sorted, duplicate-free list.
    pub fn parse_list(text: &str) -> Result<Vec<Family>> {
        let mut out = Vec::new();
        for part in text.split([',', '+']).map(str::trim).filter(|s| !s.is_empty()) {
            out.push(part.parse::<Family>().map_err(Error::InvalidArgument)?);
        }
        out.sort();
        out.dedup();
        if out.is_empty() {
            return Err(Error::InvalidArgument("no feature families requested".into()));
        }
        Ok(out)
    }

    /// `"A + E + T"`.
    pub fn label(families: &[Family]) -> String {
        families.iter().map(|f| f.as_str()).collect::<Vec<_>>().join(" + ")
    }

    /// Every non-empty subset, smallest first, each in family order.
    pub fn subsets() -> Vec<Vec<Family>> {
        let mut out: Vec<Vec<Family>> = (1u8..16)
            .map(|mask| Family::ALL.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, f)| *f).collect())
            .collect();
        out.sort_by(|a: &Vec<Family>, b| a.len().cmp(&b.len()).then(a.cmp(b)));
        out
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "A" | "a" => Ok(Family::A),
            "E" | "e" => Ok(Family::E),
            "L" | "l" => Ok(Family::L),
            "T" | "t" => Ok(Family::T),
            other => Err(format!("unknown feature family `{other}`")),
        }
    }
}

/// One family's values for one speaker-session.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBlock {
    pub family: Family,
    pub names: Arc<[String]>,
    pub values: Vec<f64>,
    /// Indices filled with 0 because their sequence was empty.
    pub empty: Vec<usize>,
}

impl FeatureBlock {
    pub(crate) fn new(family: Family, names: Arc<[String]>, values: Vec<f64>, empty: Vec<usize>) -> Result<Self> {
        if names.len() != values.len() {
            return Err(Error::Feature(format!("{family}: {} names for {} values", names.len(), values.len())));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Feature(format!("{family}: non-finite value for `{}`", names[i])));
        }
        Ok(Self { family, names, values, empty })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.values[i])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SpeakerKey {
    pub session_id: String,
    pub role: Role,
}

/// Fused features of one speaker-session.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub key: SpeakerKey,
    pub families: Vec<Family>,
    pub names: Vec<String>,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Concatenates the requested families in `A, E, L, T` order.
pub fn fuse(key: SpeakerKey, blocks: &[FeatureBlock], families: &[Family]) -> Result<FeatureVector> {
    if families.is_empty() {
        return Err(Error::Feature("no feature families requested".into()));
    }
    let mut wanted = families.to_vec();
    wanted.sort();
    wanted.dedup();
    let mut names = Vec::new();
    let mut values = Vec::new();
    for fam in &wanted {
        let block = blocks
            .iter()
            .find(|b| b.family == *fam)
            .ok_or_else(|| Error::Feature(format!("family {fam} missing for {} {}", key.session_id, key.role)))?;
        names.extend(block.names.iter().cloned());
        values.extend_from_slice(&block.values);
    }
    Ok(FeatureVector { key, families: wanted, names, values })
}

/// FNV-1a over the registry names, stable across runs and platforms.
pub fn registry_hash<S: AsRef<str>>(names: &[S]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for n in names {
        for b in n.as_ref().as_bytes().iter().chain(std::iter::once(&0u8)) {
            h ^= *b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block(family: Family, n: usize) -> FeatureBlock {
        let names: Arc<[String]> = (0..n).map(|i| format!("{family}.x{i}")).collect();
        FeatureBlock::new(family, names, vec![1.0; n], Vec::new()).unwrap()
    }

    fn key() -> SpeakerKey {
        SpeakerKey { session_id: "s".into(), role: Role::Wife }
    }

    #[test]
    fn fuse_orders_families() {
        let blocks = [block(Family::T, 167), block(Family::A, 228), block(Family::E, 3458), block(Family::L, 6)];
        let v = fuse(key(), &blocks, &[Family::T, Family::A, Family::E]).unwrap();
        assert_eq!(v.len(), 228 + 3458 + 167);
        assert!(v.names[0].starts_with("A."));
        assert!(v.names.last().unwrap().starts_with("T."));
        assert_eq!(fuse(key(), &blocks, &[Family::L]).unwrap().len(), 6);
        assert!(fuse(key(), &blocks, &[]).is_err());
        assert!(fuse(key(), &blocks[..1], &[Family::A]).is_err());
    }

    #[test]
    fn family_lists() {
        assert_eq!(Family::parse_list("T,A+e").unwrap(), [Family::A, Family::E, Family::T]);
        assert!(Family::parse_list("A,X").is_err());
        assert_eq!(Family::label(&[Family::A, Family::E, Family::T]), "A + E + T");
        let subsets = Family::subsets();
        assert_eq!(subsets.len(), 15);
        assert_eq!(subsets[0], [Family::A]);
        assert_eq!(subsets[14], Family::ALL);
        assert_eq!(Family::of_name("E.s18.Sadness"), Some(Family::E));
    }

    #[test]
    fn non_finite_rejected() {
        let names: Arc<[String]> = vec!["L.a".to_string()].into();
        assert!(FeatureBlock::new(Family::L, names, vec![f64::NAN], Vec::new()).is_err());
    }

    #[test]
    fn registry_hash_separates_names() {
        assert_ne!(registry_hash(&["ab", "c"]), registry_hash(&["a", "bc"]));
        assert_eq!(registry_hash(&["x"]), registry_hash(&["x".to_string()]));
    }
}
