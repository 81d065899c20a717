use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::Role;
use crate::error::{Error, Result};

pub const BEHAVIOR_CONFIGS: usize = 26;
pub const H_DIM: usize = 128;
pub const S_DIM: usize = 5;
pub const BEHAVIOR_NAMES: [&str; S_DIM] = ["Acceptance", "Blame", "Positive", "Negative", "Sadness"];

/// One behavior-model configuration's outputs for a speaker-session:
/// the hidden representation `h` and the behavior score vector `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorConfig {
    pub h: Vec<f64>,
    pub s: Vec<f64>,
}

/// Behavior embeddings keyed by 1-based configuration index. Dimensions
/// are checked at feature extraction, not here.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BehaviorSet {
    pub configs: BTreeMap<usize, BehaviorConfig>,
}

fn behavior_paths(dir: &Path, session_id: &str, role: Role, config: usize) -> (PathBuf, PathBuf) {
    let base = dir.join(session_id).join(role.as_str());
    (base.join(format!("config{config}.h.csv")), base.join(format!("config{config}.s.csv")))
}

fn parse_vector(text: &str, origin: &Path) -> Result<Vec<f64>> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| Error::parse(origin, 1, format!("non-numeric value `{s}`"))))
        .collect()
}

fn format_vector(v: &[f64]) -> String {
    let mut out = String::new();
    for (i, x) in v.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(out, "{x:.6}");
    }
    out.push('\n');
    out
}

/// Loads `<dir>/<session>/<role>/config<i>.{h,s}.csv` for every
/// configuration index that has both files.
pub fn load_behavior(dir: &Path, session_id: &str, role: Role) -> Result<BehaviorSet> {
    let mut configs = BTreeMap::new();
    for i in 1..=BEHAVIOR_CONFIGS {
        let (hp, sp) = behavior_paths(dir, session_id, role, i);
        match (hp.exists(), sp.exists()) {
            (false, false) => continue,
            (true, true) => {}
            _ => {
                return Err(Error::Feature(format!(
                    "behavior config {i} incomplete for {session_id}/{role}: need both .h.csv and .s.csv"
                )))
            }
        }
        let h = parse_vector(&std::fs::read_to_string(&hp).map_err(|e| Error::io(&hp, e))?, &hp)?;
        let s = parse_vector(&std::fs::read_to_string(&sp).map_err(|e| Error::io(&sp, e))?, &sp)?;
        configs.insert(i, BehaviorConfig { h, s });
    }
    Ok(BehaviorSet { configs })
}

pub fn write_behavior(dir: &Path, session_id: &str, role: Role, set: &BehaviorSet) -> Result<()> {
    for (&i, cfg) in &set.configs {
        let (hp, sp) = behavior_paths(dir, session_id, role, i);
        if let Some(parent) = hp.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        std::fs::write(&hp, format_vector(&cfg.h)).map_err(|e| Error::io(&hp, e))?;
        std::fs::write(&sp, format_vector(&cfg.s)).map_err(|e| Error::io(&sp, e))?;
    }
    Ok(())
}

pub fn parse_segment_embeddings(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_segment_embeddings_str(&text, path)
}

/// Per-segment embedding CSV: `segment_index,v0,v1,...`, optional header.
/// Indices must cover `0..n` exactly once; rows are returned in index order.
pub fn parse_segment_embeddings_str(text: &str, origin: &Path) -> Result<Vec<Vec<f64>>> {
    let mut rows: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let mut dim = None;
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let mut cells = trimmed.split(',').map(str::trim);
        let first = cells.next().unwrap_or_default();
        let Ok(index) = first.parse::<usize>() else {
            if lineno == 1 {
                continue; // header
            }
            return Err(Error::parse(origin, lineno, format!("bad segment index `{first}`")));
        };
        let values: Vec<f64> = cells
            .map(|c| c.parse::<f64>().map_err(|_| Error::parse(origin, lineno, format!("non-numeric value `{c}`"))))
            .collect::<Result<_>>()?;
        if values.is_empty() {
            return Err(Error::parse(origin, lineno, "embedding row has no values"));
        }
        match dim {
            None => dim = Some(values.len()),
            Some(d) if d != values.len() => {
                return Err(Error::parse(origin, lineno, format!("dimension {} differs from {d}", values.len())))
            }
            _ => {}
        }
        if rows.insert(index, values).is_some() {
            return Err(Error::parse(origin, lineno, format!("duplicate segment index {index}")));
        }
    }
    if let Some((&last, _)) = rows.last_key_value() {
        if last + 1 != rows.len() {
            return Err(Error::parse(origin, 0, "segment indices must be contiguous from 0"));
        }
    }
    Ok(rows.into_values().collect())
}

pub fn write_segment_embeddings(embeddings: &[Vec<f64>]) -> String {
    let dim = embeddings.first().map_or(0, Vec::len);
    let mut out = String::from("segment_index");
    for j in 0..dim {
        let _ = write!(out, ",v{j}");
    }
    out.push('\n');
    for (i, e) in embeddings.iter().enumerate() {
        let _ = write!(out, "{i},");
        out.push_str(&format_vector(e));
    }
    out
}
