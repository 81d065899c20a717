//! Speaker turns.
//!
//! A turn is a maximal run of one speaker's segments in start order in
//! which each segment begins less than `merge_gap` after the run's current
//! end. Words go to the turn containing their midpoint, or to the nearest
//! turn when none does (earlier turn on ties). A turn's pause is the silence
//! between its start and the latest end of any earlier turn, so an
//! interruption has pause 0 while keeping its full duration.

use serde::Serialize;

use crate::corpus::{Role, Segment, SegmentSet, WordAlignment};
use crate::error::{Error, Result};
use crate::time::Millis;

pub const DEFAULT_MERGE_GAP: Millis = Millis(500);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Turn {
    pub speaker: Role,
    pub start: Millis,
    pub end: Millis,
    pub words: Vec<String>,
    pub pause_before: Millis,
}

impl Turn {
    pub fn duration(&self) -> Millis {
        self.end - self.start
    }

    pub fn word_count(&self) -> usize {
        self.words.len()
    }

    /// Words per second.
    pub fn speech_rate(&self) -> f64 {
        self.words.len() as f64 / self.duration().as_secs()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct SpeakerTotals {
    pub speech: Millis,
    pub words: usize,
    pub pause: Millis,
    pub turns: usize,
}

impl SpeakerTotals {
    /// Words per second of speech; 0 for a speaker who never spoke.
    pub fn speech_rate(&self) -> f64 {
        if self.speech.0 == 0 {
            0.0
        } else {
            self.words as f64 / self.speech.as_secs()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionTurns {
    /// Ordered by start time.
    pub turns: Vec<Turn>,
    /// Husband, then Wife.
    pub totals: [SpeakerTotals; 2],
}

impl SessionTurns {
    pub fn totals(&self, role: Role) -> &SpeakerTotals {
        &self.totals[role_index(role)]
    }

    pub fn turns_of(&self, role: Role) -> impl Iterator<Item = &Turn> {
        self.turns.iter().filter(move |t| t.speaker == role)
    }

    pub fn words_of(&self, role: Role) -> impl Iterator<Item = &str> {
        self.turns_of(role).flat_map(|t| t.words.iter().map(String::as_str))
    }

    /// One role-tagged segment per turn.
    pub fn to_segments(&self) -> SegmentSet {
        SegmentSet::new(self.turns.iter().map(|t| Segment::new(t.start, t.duration(), t.speaker.tag())).collect())
    }
}

fn role_index(role: Role) -> usize {
    match role {
        Role::Husband => 0,
        Role::Wife => 1,
    }
}

pub fn build_turns(segments: &SegmentSet, words: &WordAlignment, merge_gap: Millis) -> Result<SessionTurns> {
    if segments.is_empty() {
        return Err(Error::Conversation("empty session".into()));
    }
    let mut turns: Vec<Turn> = Vec::new();
    for seg in segments.segments() {
        let speaker = Role::from_tag(&seg.tag)
            .ok_or_else(|| Error::Conversation(format!("segment tag `{}` is not a role", seg.tag)))?;
        match turns.last_mut() {
            Some(last) if last.speaker == speaker && seg.start - last.end < merge_gap => {
                last.end = last.end.max(seg.end());
            }
            _ => turns.push(Turn {
                speaker,
                start: seg.start,
                end: seg.end(),
                words: Vec::new(),
                pause_before: Millis::ZERO,
            }),
        }
    }

    let mut latest_end = Millis(i64::MIN);
    for t in turns.iter_mut() {
        t.pause_before = if latest_end.0 == i64::MIN { Millis::ZERO } else { (t.start - latest_end).max(Millis::ZERO) };
        latest_end = latest_end.max(t.end);
    }

    for w in &words.words {
        let m2 = w.midpoint_x2();
        let idx = turns.iter().position(|t| 2 * t.start.0 <= m2 && m2 < 2 * t.end.0).unwrap_or_else(|| {
            let dist = |t: &Turn| {
                if m2 < 2 * t.start.0 {
                    2 * t.start.0 - m2
                } else {
                    m2 - 2 * t.end.0
                }
            };
            // min_by_key keeps the first of equal minima
            (0..turns.len()).min_by_key(|&i| dist(&turns[i])).expect("at least one turn")
        });
        turns[idx].words.push(w.token.clone());
    }

    let mut totals = [SpeakerTotals::default(); 2];
    for t in &turns {
        let s = &mut totals[role_index(t.speaker)];
        s.speech = s.speech + t.duration();
        s.words += t.word_count();
        s.pause = s.pause + t.pause_before;
        s.turns += 1;
    }
    Ok(SessionTurns { turns, totals })
}

#[derive(Serialize)]
struct TurnLine<'a> {
    session_id: &'a str,
    index: usize,
    speaker: &'static str,
    start_s: f64,
    end_s: f64,
    pause_before_s: f64,
    word_count: usize,
    words: &'a [String],
}

/// JSON lines, one per turn.
pub fn turns_jsonl(session_id: &str, turns: &SessionTurns) -> Result<String> {
    let mut out = String::new();
    for (index, t) in turns.turns.iter().enumerate() {
        let line = TurnLine {
            session_id,
            index,
            speaker: t.speaker.tag(),
            start_s: t.start.as_secs(),
            end_s: t.end.as_secs(),
            pause_before_s: t.pause_before.as_secs(),
            word_count: t.word_count(),
            words: &t.words,
        };
        out.push_str(&serde_json::to_string(&line)?);
        out.push('\n');
    }
    Ok(out)
}
