use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::{registry_hash, Family, FeatureVector, SpeakerKey};
use crate::corpus::{RiskLabel, Role, SessionRecord, SessionType};
use crate::error::{Error, Result};

const KEY_COLUMNS: [&str; 5] = ["session_id", "couple_id", "role", "session_type", "risk"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureRow {
    pub session_id: String,
    pub couple_id: String,
    pub role: Role,
    pub session_type: SessionType,
    pub risk: RiskLabel,
    pub values: Vec<f64>,
}

impl FeatureRow {
    pub fn from_vector(record: &SessionRecord, v: FeatureVector) -> FeatureRow {
        FeatureRow {
            session_id: record.session_id.clone(),
            couple_id: record.couple_id.clone(),
            role: v.key.role,
            session_type: record.session_type,
            risk: record.speaker(v.key.role).risk,
            values: v.values,
        }
    }

    pub fn key(&self) -> SpeakerKey {
        SpeakerKey { session_id: self.session_id.clone(), role: self.role }
    }
}

/// Features of every speaker-session, one row each, sorted by
/// `(session_id, role)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub names: Vec<String>,
    pub rows: Vec<FeatureRow>,
}

impl FeatureTable {
    pub fn new(names: Vec<String>, mut rows: Vec<FeatureRow>) -> Result<Self> {
        if let Some(r) = rows.iter().find(|r| r.values.len() != names.len()) {
            return Err(Error::Feature(format!(
                "{} {}: {} values for {} features",
                r.session_id,
                r.role,
                r.values.len(),
                names.len()
            )));
        }
        rows.sort_by(|a, b| (&a.session_id, a.role).cmp(&(&b.session_id, b.role)));
        Ok(Self { names, rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Column indices of the given families, in table order.
    pub fn family_columns(&self, families: &[Family]) -> Vec<usize> {
        (0..self.names.len())
            .filter(|&i| Family::of_name(&self.names[i]).is_some_and(|f| families.contains(&f)))
            .collect()
    }

    pub fn family_sizes(&self) -> Vec<(Family, usize)> {
        Family::ALL.iter().map(|&f| (f, self.family_columns(&[f]).len())).filter(|&(_, n)| n > 0).collect()
    }

    pub fn registry_hash(&self) -> u64 {
        registry_hash(&self.names)
    }

    /// CSV with the key columns first; floats in shortest round-trip form.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&KEY_COLUMNS.join(","));
        for n in &self.names {
            out.push(',');
            out.push_str(n);
        }
        out.push('\n');
        for r in &self.rows {
            let _ = write!(
                out,
                "{},{},{},{},{}",
                r.session_id,
                r.couple_id,
                r.role,
                r.session_type.as_str(),
                r.risk.as_str()
            );
            for v in &r.values {
                let _ = write!(out, ",{v:?}");
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_csv(&text, path)
    }

    pub fn parse_csv(text: &str, origin: &Path) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| Error::parse(origin, 1, "empty feature table"))?;
        let cols: Vec<&str> = header.split(',').collect();
        if cols.len() < KEY_COLUMNS.len() || cols[..KEY_COLUMNS.len()] != KEY_COLUMNS {
            return Err(Error::parse(origin, 1, format!("header must start with {}", KEY_COLUMNS.join(","))));
        }
        let names: Vec<String> = cols[KEY_COLUMNS.len()..].iter().map(|s| s.to_string()).collect();
        let mut rows = Vec::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let ln = i + 1;
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != cols.len() {
                return Err(Error::parse(origin, ln, format!("{} fields, header has {}", f.len(), cols.len())));
            }
            let bad = |m: String| Error::parse(origin, ln, m);
            let values = f[KEY_COLUMNS.len()..]
                .iter()
                .map(|s| s.parse::<f64>().map_err(|_| bad(format!("non-numeric value `{s}`"))))
                .collect::<Result<Vec<f64>>>()?;
            rows.push(FeatureRow {
                session_id: f[0].to_string(),
                couple_id: f[1].to_string(),
                role: f[2].parse().map_err(bad)?,
                session_type: f[3].parse().map_err(bad)?,
                risk: f[4].parse().map_err(bad)?,
                values,
            });
        }
        Self::new(names, rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> FeatureTable {
        let names = vec!["A.F0.mean".to_string(), "L.pos_prop".to_string(), "T.global.pause".to_string()];
        let row = |sid: &str, role, v: [f64; 3]| FeatureRow {
            session_id: sid.into(),
            couple_id: "c1".into(),
            role,
            session_type: SessionType::WConflict,
            risk: RiskLabel::Ideation,
            values: v.to_vec(),
        };
        FeatureTable::new(
            names,
            vec![
                row("s2", Role::Husband, [1.0, 0.1, 3.0]),
                row("s1", Role::Wife, [0.1 + 0.2, 1e-300, -2.5]),
                row("s1", Role::Husband, [7.0, 0.0, 0.0]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn sorted_by_key() {
        let t = table();
        let keys: Vec<(&str, Role)> = t.rows.iter().map(|r| (r.session_id.as_str(), r.role)).collect();
        assert_eq!(keys, [("s1", Role::Husband), ("s1", Role::Wife), ("s2", Role::Husband)]);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let t = table();
        let back = FeatureTable::parse_csv(&t.to_csv(), Path::new("t.csv")).unwrap();
        assert_eq!(back, t);
        assert!(t.to_csv().starts_with("session_id,couple_id,role,session_type,risk,A.F0.mean"));
    }

    #[test]
    fn family_selection() {
        let t = table();
        assert_eq!(t.family_columns(&[Family::A, Family::T]), [0, 2]);
        assert_eq!(t.family_sizes(), [(Family::A, 1), (Family::L, 1), (Family::T, 1)]);
    }

    #[test]
    fn ragged_row_rejected() {
        let err = FeatureTable::parse_csv(
            "session_id,couple_id,role,session_type,risk,x\ns,c,Wife,RFL,none\n",
            Path::new("t"),
        )
        .unwrap_err();
        assert!(err.to_string().contains("t:2"));
    }
}
