//! Corpus artifacts: the session manifest, RTTM/CTM tracks, frame-level
//! acoustic descriptors, embeddings and the emotion lexicon.
//!
//! Everything is parsed into immutable values. [`SessionSource`] abstracts
//! over where a session's artifacts come from (files on disk, or the
//! synthetic generator) so the pipeline does not care.

mod ctm;
mod embeddings;
mod frames;
mod lexicon;
mod manifest;
mod rttm;
mod store;

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::time::Millis;

pub use ctm::{parse_ctm, parse_ctm_str, write_ctm};
pub use embeddings::{
    load_behavior, parse_segment_embeddings, parse_segment_embeddings_str, write_behavior, write_segment_embeddings,
    BehaviorConfig, BehaviorSet, BEHAVIOR_CONFIGS, BEHAVIOR_NAMES, H_DIM, S_DIM,
};
pub use frames::{parse_frames, parse_frames_str, write_frames, FrameMatrix, PITCH_CHANNEL};
pub use lexicon::{parse_lexicon, parse_lexicon_str, write_lexicon, Emotion, Lexicon, LexiconEntry};
pub use manifest::{parse_manifest, parse_manifest_str, write_manifest_line};
pub use rttm::{parse_rttm, parse_rttm_str, write_rttm};
pub use store::{canonical_dump, validate, DiskCorpus, SessionData, SessionSource, ValidationReport};

/// Ordinal degree of suicidal risk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RiskLabel {
    None = 0,
    Ideation = 1,
    Attempt = 2,
}

impl RiskLabel {
    pub const ALL: [RiskLabel; 3] = [RiskLabel::None, RiskLabel::Ideation, RiskLabel::Attempt];

    pub fn degree(self) -> u8 {
        self as u8
    }

    pub fn from_degree(d: u8) -> Option<RiskLabel> {
        RiskLabel::ALL.get(d as usize).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RiskLabel::None => "none",
            RiskLabel::Ideation => "ideation",
            RiskLabel::Attempt => "attempt",
        }
    }
}

impl FromStr for RiskLabel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "none" => Ok(RiskLabel::None),
            "ideation" => Ok(RiskLabel::Ideation),
            "attempt" => Ok(RiskLabel::Attempt),
            other => Err(format!("unknown risk label `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SessionType {
    #[serde(rename = "RFL")]
    Rfl,
    #[serde(rename = "W-Conflict")]
    WConflict,
    #[serde(rename = "H-Conflict")]
    HConflict,
}

impl SessionType {
    pub const ALL: [SessionType; 3] = [SessionType::Rfl, SessionType::WConflict, SessionType::HConflict];

    pub fn as_str(self) -> &'static str {
        match self {
            SessionType::Rfl => "RFL",
            SessionType::WConflict => "W-Conflict",
            SessionType::HConflict => "H-Conflict",
        }
    }

    pub fn is_conflict(self) -> bool {
        !matches!(self, SessionType::Rfl)
    }
}

impl FromStr for SessionType {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "RFL" => Ok(SessionType::Rfl),
            "W-Conflict" => Ok(SessionType::WConflict),
            "H-Conflict" => Ok(SessionType::HConflict),
            other => Err(format!("unknown session type `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Role {
    Husband,
    Wife,
}

impl Role {
    pub const BOTH: [Role; 2] = [Role::Husband, Role::Wife];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Husband => "Husband",
            Role::Wife => "Wife",
        }
    }

    /// Speaker tag used in role-tagged RTTM output.
    pub fn tag(self) -> &'static str {
        match self {
            Role::Husband => "H",
            Role::Wife => "W",
        }
    }

    /// Accepts `H`/`W` tags as well as full role names.
    pub fn from_tag(tag: &str) -> Option<Role> {
        match tag {
            "H" | "Husband" => Some(Role::Husband),
            "W" | "Wife" => Some(Role::Wife),
            _ => None,
        }
    }

    pub fn partner(self) -> Role {
        match self {
            Role::Husband => Role::Wife,
            Role::Wife => Role::Husband,
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Role {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "Husband" => Ok(Role::Husband),
            "Wife" => Ok(Role::Wife),
            other => Err(format!("unknown role `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Speaker {
    pub role: Role,
    pub risk: RiskLabel,
}

/// Paths of the per-session artifacts, already resolved against the
/// manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionFiles {
    pub rttm: PathBuf,
    pub ctm: PathBuf,
    pub frames: PathBuf,
    pub behavior_dir: PathBuf,
    pub embeddings: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub session_id: String,
    pub couple_id: String,
    pub session_type: SessionType,
    /// Husband first, then Wife.
    pub speakers: [Speaker; 2],
    pub duration: Millis,
    pub frame_period_s: f64,
    pub files: SessionFiles,
}

impl SessionRecord {
    pub fn speaker(&self, role: Role) -> Speaker {
        match role {
            Role::Husband => self.speakers[0],
            Role::Wife => self.speakers[1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Segment {
    pub start: Millis,
    pub dur: Millis,
    pub tag: String,
}

impl Segment {
    pub fn new(start: Millis, dur: Millis, tag: impl Into<String>) -> Self {
        Self { start, dur, tag: tag.into() }
    }

    pub fn end(&self) -> Millis {
        self.start + self.dur
    }
}

/// Segments of one session, sorted by start time (stable for equal starts).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentSet {
    segments: Vec<Segment>,
}

impl SegmentSet {
    pub fn new(mut segments: Vec<Segment>) -> Self {
        segments.sort_by_key(|s| s.start);
        Self { segments }
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn tags(&self) -> Vec<&str> {
        let mut tags: Vec<&str> = self.segments.iter().map(|s| s.tag.as_str()).collect();
        tags.sort_unstable();
        tags.dedup();
        tags
    }

    /// Same segments with new tags, index for index.
    pub fn retagged<S: AsRef<str>>(&self, tags: &[S]) -> SegmentSet {
        assert_eq!(tags.len(), self.segments.len(), "one tag per segment");
        let segments = self.segments.iter().zip(tags).map(|(s, t)| Segment::new(s.start, s.dur, t.as_ref())).collect();
        SegmentSet { segments }
    }

    /// Index pairs of segments with different tags that overlap in time.
    pub fn overlaps(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.segments.len() {
            for j in (i + 1)..self.segments.len() {
                let (a, b) = (&self.segments[i], &self.segments[j]);
                if b.start >= a.end() {
                    // sorted by start, but later j may still overlap a longer a
                    continue;
                }
                if a.tag != b.tag {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Word {
    pub start: Millis,
    pub dur: Millis,
    pub token: String,
    pub confidence: f64,
}

impl Word {
    pub fn end(&self) -> Millis {
        self.start + self.dur
    }

    /// Midpoint in milliseconds, doubled to stay integral.
    pub fn midpoint_x2(&self) -> i64 {
        2 * self.start.0 + self.dur.0
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WordAlignment {
    pub words: Vec<Word>,
}

impl WordAlignment {
    pub fn new(mut words: Vec<Word>) -> Self {
        words.sort_by_key(|w| w.start);
        Self { words }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Lowercases and strips leading/trailing punctuation.
pub fn normalize_token(raw: &str) -> String {
    raw.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase()
}

pub(crate) fn group_by_session<T>(items: Vec<(String, T)>) -> BTreeMap<String, Vec<T>> {
    let mut map: BTreeMap<String, Vec<T>> = BTreeMap::new();
    for (k, v) in items {
        map.entry(k).or_default().push(v);
    }
    map
}
