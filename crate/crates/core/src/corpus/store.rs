use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::{
    load_behavior, parse_ctm, parse_frames, parse_lexicon, parse_manifest, parse_rttm, parse_segment_embeddings,
    BehaviorSet, FrameMatrix, Lexicon, Role, SegmentSet, SessionRecord, WordAlignment, BEHAVIOR_CONFIGS,
};
use crate::error::{Error, Issue, Result};
use crate::time::Millis;

/// Boundary slack allowed past the declared session duration.
pub const BOUNDS_SLACK: Millis = Millis(500);

/// All artifacts of one session.
#[derive(Debug, Clone)]
pub struct SessionData {
    pub segments: SegmentSet,
    pub words: WordAlignment,
    pub frames: FrameMatrix,
    pub embeddings: Option<Vec<Vec<f64>>>,
    pub behavior: BTreeMap<Role, BehaviorSet>,
}

/// Anything that can hand out session records and load their artifacts.
pub trait SessionSource: Sync {
    fn records(&self) -> &[SessionRecord];
    fn load(&self, record: &SessionRecord) -> Result<SessionData>;
    fn lexicon(&self) -> &Lexicon;
}

/// A corpus described by a manifest on disk.
#[derive(Debug, Clone)]
pub struct DiskCorpus {
    manifest: PathBuf,
    records: Vec<SessionRecord>,
    lexicon: Lexicon,
}

impl DiskCorpus {
    pub fn open(manifest: &Path, lexicon: &Path) -> Result<Self> {
        let (records, lexicon) = rayon::join(|| parse_manifest(manifest), || parse_lexicon(lexicon));
        Ok(Self { manifest: manifest.to_path_buf(), records: records?, lexicon: lexicon? })
    }

    pub fn manifest_path(&self) -> &Path {
        &self.manifest
    }
}

impl SessionSource for DiskCorpus {
    fn records(&self) -> &[SessionRecord] {
        &self.records
    }

    fn load(&self, record: &SessionRecord) -> Result<SessionData> {
        let f = &record.files;
        let sid = &record.session_id;
        let segments = parse_rttm(&f.rttm)?.remove(sid).ok_or_else(|| {
            Error::Manifest(vec![Issue::new(sid, "rttm", format!("no segments for session in {}", f.rttm.display()))])
        })?;
        let words = match parse_ctm(&f.ctm)?.remove(sid) {
            Some(w) => w,
            None => {
                log::warn!("session {sid}: no words in {}", f.ctm.display());
                WordAlignment::default()
            }
        };
        let frames = parse_frames(&f.frames, record.frame_period_s)?;
        let embeddings = f.embeddings.as_deref().map(parse_segment_embeddings).transpose()?;
        let mut behavior = BTreeMap::new();
        for role in Role::BOTH {
            behavior.insert(role, load_behavior(&f.behavior_dir, sid, role)?);
        }
        Ok(SessionData { segments, words, frames, embeddings, behavior })
    }

    fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ValidationReport {
    pub sessions: usize,
    pub errors: Vec<Issue>,
    pub warnings: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }
}

fn check_session(record: &SessionRecord, data: &SessionData) -> (Vec<Issue>, Vec<Issue>) {
    let sid = record.session_id.as_str();
    let mut errors = Vec::new();
    let mut warnings = Vec::new();
    let limit = record.duration + BOUNDS_SLACK;

    if data.segments.is_empty() {
        errors.push(Issue::new(sid, "rttm", "session has no segments"));
    }
    for (i, s) in data.segments.segments().iter().enumerate() {
        if s.end() > limit {
            errors.push(Issue::new(sid, "rttm", format!("segment {i} ends at {} s, past the session end", s.end())));
        }
    }
    for (i, j) in data.segments.overlaps() {
        warnings.push(Issue::new(sid, "rttm", format!("segments {i} and {j} overlap")));
    }
    if data.embeddings.is_none() {
        for tag in data.segments.tags() {
            if Role::from_tag(tag).is_none() {
                errors.push(Issue::new(
                    sid,
                    "rttm",
                    format!("tag `{tag}` is not a role and no embeddings are available to diarize"),
                ));
            }
        }
    }
    for (i, w) in data.words.words.iter().enumerate() {
        if w.end() > limit {
            errors.push(Issue::new(sid, "ctm", format!("word {i} `{}` ends past the session end", w.token)));
        }
    }
    let covered = data.frames.frames() as f64 * data.frames.frame_period_s();
    if (covered - record.duration.as_secs()).abs() > 1.0 {
        warnings.push(Issue::new(
            sid,
            "frames",
            format!("frames cover {covered:.2} s but the session lasts {} s", record.duration),
        ));
    }
    if let Some(e) = &data.embeddings {
        if e.len() != data.segments.len() {
            errors.push(Issue::new(
                sid,
                "embeddings",
                format!("{} embeddings for {} segments", e.len(), data.segments.len()),
            ));
        }
    }
    for (role, set) in &data.behavior {
        let missing: Vec<usize> = (1..=BEHAVIOR_CONFIGS).filter(|i| !set.configs.contains_key(i)).collect();
        if !missing.is_empty() {
            errors.push(Issue::new(sid, "behavior_dir", format!("{role}: behavior configs {missing:?} absent")));
        }
    }
    (errors, warnings)
}

/// Loads every session and checks cross-artifact consistency.
pub fn validate(source: &dyn SessionSource) -> ValidationReport {
    let results: Vec<(Vec<Issue>, Vec<Issue>)> = source
        .records()
        .par_iter()
        .map(|r| match source.load(r) {
            Ok(data) => check_session(r, &data),
            Err(Error::Manifest(issues)) => (issues, Vec::new()),
            Err(e) => (vec![Issue::new(&r.session_id, "artifacts", e.to_string())], Vec::new()),
        })
        .collect();
    let mut report = ValidationReport { sessions: source.records().len(), ..Default::default() };
    for (e, w) in results {
        report.errors.extend(e);
        report.warnings.extend(w);
    }
    report
}

fn digest(values: impl Iterator<Item = f64>) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in values {
        for b in v.to_bits().to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    format!("{h:016x}")
}

#[derive(Serialize)]
struct SessionDump<'a> {
    record: &'a SessionRecord,
    segments: &'a SegmentSet,
    words: &'a WordAlignment,
    frame_shape: (usize, usize),
    channels: &'a [String],
    frames_digest: String,
    embeddings_digest: Option<String>,
    behavior_digest: BTreeMap<Role, String>,
}

/// A canonical, line-per-session JSON rendering of the loaded corpus.
/// Large numeric blocks are reduced to bit-exact digests.
pub fn canonical_dump(source: &dyn SessionSource) -> Result<String> {
    let mut records: Vec<&SessionRecord> = source.records().iter().collect();
    records.sort_by(|a, b| a.session_id.cmp(&b.session_id));
    let lines: Vec<String> = records
        .par_iter()
        .map(|r| {
            let data = source.load(r)?;
            let dump = SessionDump {
                record: r,
                segments: &data.segments,
                words: &data.words,
                frame_shape: (data.frames.frames(), data.frames.channels()),
                channels: data.frames.channel_names(),
                frames_digest: digest(data.frames.values().iter().copied()),
                embeddings_digest: data.embeddings.as_ref().map(|e| digest(e.iter().flatten().copied())),
                behavior_digest: data
                    .behavior
                    .iter()
                    .map(|(role, set)| {
                        (*role, digest(set.configs.values().flat_map(|c| c.h.iter().chain(&c.s)).copied()))
                    })
                    .collect(),
            };
            Ok(serde_json::to_string(&dump)?)
        })
        .collect::<Result<_>>()?;
    let mut out = lines.join("\n");
    out.push('\n');
    Ok(out)
}
