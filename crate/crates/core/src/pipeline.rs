//! Corpus-to-feature-table extraction and the JSON run configuration.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conversation::{build_turns, DEFAULT_MERGE_GAP};
use crate::corpus::{Role, SegmentSet, SessionData, SessionRecord, SessionSource};
use crate::diarization::{diarize_session, DevSession, RoleAssignment, DEFAULT_COLLAR};
use crate::error::{Error, Result};
use crate::evaluation::{ExperimentSpec, PartitionScheme, Scenario};
use crate::features::{
    extract_acoustic, extract_behavior, extract_lexical, extract_turn_taking, fuse, Family, FeatureRow, FeatureTable,
    FeatureVector, SpeakerKey,
};
use crate::model::{exponent_grid, HyperGrid, Scheme};
use crate::seed::sub_seed;
use crate::time::Millis;

/// Pruning parameter used when none is configured.
pub const DEFAULT_P: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractOptions {
    pub merge_gap: Millis,
    /// Pruning parameter for sessions whose segments are not role-tagged.
    pub p: f64,
    pub seed: u64,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        Self { merge_gap: DEFAULT_MERGE_GAP, p: DEFAULT_P, seed: 0 }
    }
}

/// Role-tagged segments of a session: the reference tags when every tag
/// is a role, otherwise the result of diarizing the segment embeddings.
pub fn role_segments(
    record: &SessionRecord,
    data: &SessionData,
    opts: &ExtractOptions,
) -> Result<(SegmentSet, Option<RoleAssignment>)> {
    if data.segments.tags().iter().all(|t| Role::from_tag(t).is_some()) {
        return Ok((data.segments.clone(), None));
    }
    let emb = data.embeddings.as_ref().ok_or_else(|| {
        Error::Diarization(format!(
            "session {}: segments are not role-tagged and no embeddings are available",
            record.session_id
        ))
    })?;
    let seed = sub_seed(opts.seed, &format!("diarize/{}", record.session_id));
    let r = diarize_session(&data.segments, emb, &data.frames, opts.p, seed)?;
    Ok((r.role_tagged(), Some(r.roles)))
}

/// Labelled sessions for tuning the pruning parameter: every session
/// whose segments are role-tagged and carry embeddings, sorted by id, at
/// most `limit` of them.
pub fn dev_sessions(source: &dyn SessionSource, limit: Option<usize>) -> Result<Vec<DevSession>> {
    let mut records: Vec<&SessionRecord> = source.records().iter().filter(|r| r.files.embeddings.is_some()).collect();
    records.sort_by(|a, b| a.session_id.cmp(&b.session_id));
    let mut out = Vec::new();
    for r in records {
        if limit.is_some_and(|l| out.len() >= l) {
            break;
        }
        let data = source.load(r)?;
        let tagged = data.segments.tags().iter().all(|t| Role::from_tag(t).is_some());
        if let (true, Some(embeddings)) = (tagged, data.embeddings) {
            out.push(DevSession {
                session_id: r.session_id.clone(),
                segments: data.segments.clone(),
                embeddings,
                reference: data.segments,
            });
        }
    }
    if out.is_empty() {
        return Err(Error::Diarization("no role-tagged sessions with embeddings to tune on".into()));
    }
    Ok(out)
}

/// Fused feature vectors of both speakers of one session, Husband first.
pub fn extract_session(
    source: &dyn SessionSource,
    record: &SessionRecord,
    families: &[Family],
    opts: &ExtractOptions,
) -> Result<[FeatureVector; 2]> {
    let data = source.load(record)?;
    let (segments, _) = role_segments(record, &data, opts)?;
    let turns = build_turns(&segments, &data.words, opts.merge_gap)?;
    let sid = &record.session_id;
    let vector = |role: Role| -> Result<FeatureVector> {
        let mut blocks = Vec::with_capacity(4);
        for fam in families {
            let block = match fam {
                Family::A => extract_acoustic(&data.frames, &segments, role),
                Family::E => match data.behavior.get(&role) {
                    Some(set) => extract_behavior(set),
                    None => Err(Error::Feature(format!("no behavior vectors for {role}"))),
                },
                Family::L => extract_lexical(&turns, source.lexicon(), role),
                Family::T => extract_turn_taking(&turns, role),
            }
            .map_err(|e| Error::Feature(format!("session {sid}: {e}")))?;
            blocks.push(block);
        }
        fuse(SpeakerKey { session_id: sid.clone(), role }, &blocks, families)
    };
    Ok([vector(Role::Husband)?, vector(Role::Wife)?])
}

/// Extracts every session of `source` in parallel. All sessions must
/// produce the same feature registry.
pub fn extract_table(source: &dyn SessionSource, families: &[Family], opts: &ExtractOptions) -> Result<FeatureTable> {
    let mut families = families.to_vec();
    families.sort();
    families.dedup();
    if families.is_empty() {
        return Err(Error::InvalidArgument("no feature families requested".into()));
    }
    let records = source.records();
    if records.is_empty() {
        return Err(Error::InvalidArgument("corpus has no sessions".into()));
    }
    let pairs: Vec<[FeatureVector; 2]> =
        records.par_iter().map(|r| extract_session(source, r, &families, opts)).collect::<Result<_>>()?;
    let names = pairs[0][0].names.clone();
    let mut rows = Vec::with_capacity(2 * pairs.len());
    for (record, pair) in records.iter().zip(pairs) {
        for v in pair {
            if v.names != names {
                return Err(Error::Feature(format!(
                    "session {} {}: feature registry differs from session {}",
                    record.session_id, v.key.role, records[0].session_id
                )));
            }
            rows.push(FeatureRow::from_vector(record, v));
        }
    }
    FeatureTable::new(names, rows)
}

fn default_merge_gap_s() -> f64 {
    DEFAULT_MERGE_GAP.as_secs()
}

fn default_collar_s() -> f64 {
    DEFAULT_COLLAR.as_secs()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiarizationConfig {
    /// Fixed pruning parameter. When absent, `p_grid` is searched by
    /// `tune-p` and [`DEFAULT_P`] is used for extraction.
    #[serde(default)]
    pub p: Option<f64>,
    #[serde(default)]
    pub p_grid: Option<Vec<f64>>,
    #[serde(default = "default_merge_gap_s")]
    pub merge_gap_s: f64,
    #[serde(default = "default_collar_s")]
    pub collar_s: f64,
}

impl Default for DiarizationConfig {
    fn default() -> Self {
        Self { p: None, p_grid: None, merge_gap_s: default_merge_gap_s(), collar_s: default_collar_s() }
    }
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "both_schemes")]
    pub schemes: Vec<String>,
    #[serde(default = "yes")]
    pub linear: bool,
    #[serde(default = "yes")]
    pub rbf: bool,
    #[serde(default = "exponent_grid")]
    pub c_values: Vec<f64>,
    #[serde(default = "exponent_grid")]
    pub gammas: Vec<f64>,
}

fn both_schemes() -> Vec<String> {
    Scheme::ALL.iter().map(|s| s.as_str().to_string()).collect()
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { schemes: both_schemes(), linear: true, rbf: true, c_values: exponent_grid(), gammas: exponent_grid() }
    }
}

impl GridConfig {
    pub fn to_grid(&self) -> Result<HyperGrid> {
        let schemes = self
            .schemes
            .iter()
            .map(|s| {
                Scheme::ALL
                    .into_iter()
                    .find(|x| x.as_str() == s)
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown normalization scheme `{s}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(bad) = self.c_values.iter().chain(&self.gammas).find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidArgument(format!("grid values must be positive and finite, got {bad}")));
        }
        let grid = HyperGrid {
            schemes,
            linear: self.linear,
            rbf: self.rbf,
            c_values: self.c_values.clone(),
            gammas: self.gammas.clone(),
        };
        if grid.is_empty() {
            return Err(Error::InvalidArgument("hyperparameter grid is empty".into()));
        }
        Ok(grid)
    }
}

fn default_families() -> String {
    "A,E,L,T".into()
}

fn default_scenario() -> String {
    Scenario::DegreeOfRisk.as_str().into()
}

fn default_partition() -> String {
    PartitionScheme::None.as_str().into()
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// A full run, read from JSON. Relative paths resolve against the
/// directory holding the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub manifest: PathBuf,
    pub lexicon: PathBuf,
    #[serde(default)]
    pub diarization: DiarizationConfig,
    #[serde(default = "default_families")]
    pub families: String,
    #[serde(default = "default_scenario")]
    pub scenario: String,
    #[serde(default = "default_partition")]
    pub partition: String,
    #[serde(default)]
    pub grid: GridConfig,
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

impl PipelineConfig {
    pub fn new(manifest: impl Into<PathBuf>, lexicon: impl Into<PathBuf>, seed: u64) -> Self {
        Self {
            manifest: manifest.into(),
            lexicon: lexicon.into(),
            diarization: DiarizationConfig::default(),
            families: default_families(),
            scenario: default_scenario(),
            partition: default_partition(),
            grid: GridConfig::default(),
            seed,
            output_dir: default_output_dir(),
        }
    }

    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: PipelineConfig = serde_json::from_str(text)?;
        for p in [&mut cfg.manifest, &mut cfg.lexicon, &mut cfg.output_dir] {
            if p.is_relative() {
                *p = base_dir.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Checks paths and parses every enumerated field.
    pub fn validate(&self) -> Result<()> {
        for (field, p) in [("manifest", &self.manifest), ("lexicon", &self.lexicon)] {
            if !p.is_file() {
                return Err(Error::InvalidArgument(format!("{field}: {} does not exist", p.display())));
            }
        }
        self.families()?;
        self.scenario()?;
        self.partition()?;
        self.grid.to_grid()?;
        self.extract_options()?;
        Ok(())
    }

    pub fn families(&self) -> Result<Vec<Family>> {
        Family::parse_list(&self.families)
    }

    pub fn scenario(&self) -> Result<Scenario> {
        self.scenario.parse()
    }

    pub fn partition(&self) -> Result<PartitionScheme> {
        self.partition.parse()
    }

    pub fn collar(&self) -> Result<Millis> {
        let c = self.diarization.collar_s;
        if !(c.is_finite() && c >= 0.0) {
            return Err(Error::InvalidArgument(format!("collar_s must be non-negative, got {c}")));
        }
        Ok(Millis::from_secs_f64(c))
    }

    pub fn extract_options(&self) -> Result<ExtractOptions> {
        let gap = self.diarization.merge_gap_s;
        if !(gap.is_finite() && gap > 0.0) {
            return Err(Error::InvalidArgument(format!("merge_gap_s must be positive, got {gap}")));
        }
        let p = self.diarization.p.unwrap_or(DEFAULT_P);
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidArgument(format!("p must lie in (0, 1], got {p}")));
        }
        Ok(ExtractOptions { merge_gap: Millis::from_secs_f64(gap), p, seed: sub_seed(self.seed, "extract") })
    }

    pub fn experiment(&self) -> Result<ExperimentSpec> {
        let mut spec = ExperimentSpec::new(self.scenario()?, self.partition()?, &self.families()?, self.seed);
        spec.grid = self.grid.to_grid()?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = PipelineConfig::from_json(
            r#"{"manifest": "m.jsonl", "lexicon": "lex.txt", "seed": 3}"#,
            Path::new("/data"),
        )
        .unwrap();
        assert_eq!(cfg.manifest, PathBuf::from("/data/m.jsonl"));
        assert_eq!(cfg.output_dir, PathBuf::from("/data/out"));
        assert_eq!(cfg.families().unwrap(), Family::ALL.to_vec());
        assert_eq!(cfg.scenario().unwrap(), Scenario::DegreeOfRisk);
        assert_eq!(cfg.experiment().unwrap().grid.len(), 924);
        assert_eq!(cfg.extract_options().unwrap().merge_gap, Millis(500));
    }

    #[test]
    fn seed_is_mandatory_and_fields_are_checked() {
        assert!(PipelineConfig::from_json(r#"{"manifest": "m", "lexicon": "l"}"#, Path::new(".")).is_err());
        assert!(PipelineConfig::from_json(
            r#"{"manifest": "m", "lexicon": "l", "seed": 1, "sede": 2}"#,
            Path::new(".")
        )
        .is_err());
        let mut cfg = PipelineConfig::new("/nonexistent/m.jsonl", "/nonexistent/l.txt", 1);
        assert!(cfg.validate().unwrap_err().to_string().contains("/nonexistent/m.jsonl"));
        cfg.diarization.p = Some(0.0);
        assert!(cfg.extract_options().is_err());
        cfg.scenario = "binary".into();
        assert!(cfg.scenario().is_err());
    }

    #[test]
    fn json_round_trip() {
        let mut cfg = PipelineConfig::new("/a/m.jsonl", "/a/l.txt", 11);
        cfg.grid.rbf = false;
        cfg.diarization.p = Some(0.35);
        let back = PipelineConfig::from_json(&cfg.to_json().unwrap(), Path::new("/elsewhere")).unwrap();
        // relative paths resolve against the config's directory
        assert_eq!(back.output_dir, Path::new("/elsewhere/out"));
        cfg.output_dir = "/a/out".into();
        let back = PipelineConfig::from_json(&cfg.to_json().unwrap(), Path::new("/elsewhere")).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.experiment().unwrap().grid.len(), 42);
    }
}
