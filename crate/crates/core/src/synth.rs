//! Synthetic couples corpus with planted risk effects.
//!
//! Every couple has three sessions (RFL, W-Conflict, H-Conflict). Risk
//! labels are drawn per speaker from the class priors, and each feature
//! family gets its own planted effect, scaled by the speaker's degree of
//! risk (0, 1 or 2):
//!
//! * acoustic: every fourth non-pitch channel shifts its mean,
//! * behavior: the sadness score falls, most strongly in configurations 17
//!   and 18, and the positive score of configuration 18 falls with it,
//! * lexical: negative emotion words become more frequent and positive
//!   ones rarer,
//! * turn-taking: the spread of words per turn widens.
//!
//! Sessions are generated on demand from a sub-seed of the master seed and
//! the session id, so [`SynthCorpus`] is a [`SessionSource`] without any
//! files, and [`write_corpus`] produces the same values on disk. Numbers
//! are quantized to binary fractions that the writers print exactly.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{
    write_behavior, write_ctm, write_frames, write_lexicon, write_manifest_line, write_rttm, write_segment_embeddings,
    BehaviorConfig, BehaviorSet, Emotion, FrameMatrix, Lexicon, LexiconEntry, RiskLabel, Role, Segment, SegmentSet,
    SessionData, SessionFiles, SessionRecord, SessionSource, SessionType, Speaker, Word, WordAlignment,
    BEHAVIOR_CONFIGS, H_DIM, PITCH_CHANNEL, S_DIM,
};
use crate::error::{Error, Result};
use crate::seed::sub_seed;
use crate::time::Millis;

/// Planted effect sizes, each per unit of risk degree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Effects {
    /// Channel mean shift, in units of the frame noise.
    pub acoustic: f64,
    /// Sadness-score shift, in units of the score's spread.
    pub behavior: f64,
    /// Log-rate shift of emotion words.
    pub lexical: f64,
    /// Extra spread of words per turn, in units of the baseline spread.
    pub turn_taking: f64,
}

impl Effects {
    pub const STRONG: Effects = Effects { acoustic: 0.4, behavior: 1.0, lexical: 0.2, turn_taking: 0.6 };
    pub const NONE: Effects = Effects { acoustic: 0.0, behavior: 0.0, lexical: 0.0, turn_taking: 0.0 };

    fn values(&self) -> [(&'static str, f64); 4] {
        [
            ("acoustic", self.acoustic),
            ("behavior", self.behavior),
            ("lexical", self.lexical),
            ("turn_taking", self.turn_taking),
        ]
    }
}

/// Spreads of the nuisance variation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Noise {
    /// Frame-to-frame variation of every non-pitch channel.
    pub frame: f64,
    /// Between-speaker spread of channel levels.
    pub speaker: f64,
    /// Between-session spread of channel levels and behavior latents.
    pub session: f64,
    /// Item noise on behavior scores and hidden vectors.
    pub behavior: f64,
    /// Per-segment jitter around a speaker's embedding centroid.
    pub embedding: f64,
}

impl Default for Noise {
    fn default() -> Self {
        Self { frame: 1.0, speaker: 1.0, session: 0.3, behavior: 0.5, embedding: 0.03 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub couples: usize,
    /// Probabilities of none, ideation and attempt.
    pub priors: [f64; 3],
    pub session_s: f64,
    pub frame_period_s: f64,
    /// Frame channels including pitch.
    pub channels: usize,
    pub embedding_dim: usize,
    pub effects: Effects,
    pub noise: Noise,
    /// Tag segments `spk1` / `spk2` in random order instead of by role, so
    /// extraction has to diarize.
    pub anonymous_tags: bool,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            couples: 62,
            priors: [65.0 / 124.0, 37.0 / 124.0, 22.0 / 124.0],
            session_s: 600.0,
            frame_period_s: 0.1,
            channels: 38,
            embedding_dim: 16,
            effects: Effects::STRONG,
            noise: Noise::default(),
            anonymous_tags: false,
        }
    }
}

impl SynthSpec {
    /// Default shape with every effect at zero.
    pub fn null() -> Self {
        Self { effects: Effects::NONE, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.couples == 0 {
            return bad("at least one couple is required".into());
        }
        if self.priors.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return bad(format!("class priors must be non-negative, got {:?}", self.priors));
        }
        let total: f64 = self.priors.iter().sum();
        if total == 0.0 {
            return bad("class priors put no mass on any class".into());
        }
        if (total - 1.0).abs() > 1e-6 {
            return bad(format!("class priors sum to {total}, not 1"));
        }
        if self.channels < 2 {
            return bad(format!("at least 2 frame channels are required, got {}", self.channels));
        }
        if self.embedding_dim < 2 {
            return bad(format!("embedding dimension must be at least 2, got {}", self.embedding_dim));
        }
        if !(self.session_s.is_finite() && self.session_s >= 30.0) {
            return bad(format!("sessions must last at least 30 s, got {}", self.session_s));
        }
        if !(self.frame_period_s > 0.0 && self.frame_period_s <= 1.0) {
            return bad(format!("frame period must lie in (0, 1] s, got {}", self.frame_period_s));
        }
        for (name, v) in self.effects.values() {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("effect size `{name}` must be non-negative, got {v}"));
            }
        }
        let n = self.noise;
        for (name, v) in [
            ("frame", n.frame),
            ("speaker", n.speaker),
            ("session", n.session),
            ("behavior", n.behavior),
            ("embedding", n.embedding),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("noise `{name}` must be non-negative, got {v}"));
            }
        }
        Ok(())
    }
}

const POSITIVE_WORDS: [&str; 12] =
    ["happy", "love", "good", "great", "nice", "glad", "thanks", "sweet", "fun", "enjoy", "laughing", "hopeful"];
const NEGATIVE_WORDS: [&str; 12] =
    ["sad", "hate", "angry", "hurt", "cry", "upset", "awful", "worried", "lonely", "tired", "annoyed", "afraid"];
const NEUTRAL_WORDS: [&str; 40] = [
    "i", "you", "we", "the", "a", "and", "to", "it", "that", "is", "was", "do", "know", "think", "just", "like", "so",
    "what", "but", "not", "with", "have", "about", "when", "time", "home", "work", "kids", "money", "said", "really",
    "yeah", "well", "mean", "week", "going", "talk", "out", "there", "then",
];

/// The emotion lexicon shipped with synthetic corpora.
pub fn synthetic_lexicon() -> Lexicon {
    let stems = [
        ("laugh*", Emotion::Positive),
        ("hope*", Emotion::Positive),
        ("annoy*", Emotion::Negative),
        ("worr*", Emotion::Negative),
    ];
    let mut entries: Vec<LexiconEntry> = Vec::new();
    for (words, cat) in [(&POSITIVE_WORDS, Emotion::Positive), (&NEGATIVE_WORDS, Emotion::Negative)] {
        for w in words.iter() {
            if !stems.iter().any(|(s, _)| w.starts_with(s.trim_end_matches('*'))) {
                entries.push(LexiconEntry { pattern: w.to_string(), category: cat });
            }
        }
    }
    entries.extend(stems.iter().map(|(p, c)| LexiconEntry { pattern: p.to_string(), category: *c }));
    Lexicon::new(entries).expect("built-in lexicon is well formed")
}

/// Frame channel names: pitch first, then common descriptor names, then
/// numbered fillers.
pub fn channel_names(d: usize) -> Vec<String> {
    let mut names: Vec<String> =
        [PITCH_CHANNEL, "F0env", "voiceProb", "intensity", "loudness", "zcr"].iter().map(|s| s.to_string()).collect();
    names.extend((1..=12).map(|i| format!("mfcc{i}")));
    names.extend((0..8).map(|i| format!("lspFreq{i}")));
    names.extend((1..=12).map(|i| format!("mfcc{i}_de")));
    let base = names.len();
    names.extend((base..d).map(|i| format!("lld{i}")));
    names.truncate(d);
    names
}

const WORDS_PER_TURN: f64 = 18.0;
const WORDS_SD: f64 = 3.0;

fn quantize(x: f64, steps: f64) -> f64 {
    (x * steps).round() / steps
}

fn normal(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn session_code(t: SessionType) -> &'static str {
    match t {
        SessionType::Rfl => "rfl",
        SessionType::WConflict => "wc",
        SessionType::HConflict => "hc",
    }
}

fn role_index(role: Role) -> usize {
    match role {
        Role::Husband => 0,
        Role::Wife => 1,
    }
}

// Stable per-speaker traits, shared by all of a couple's sessions.
#[derive(Debug, Clone)]
struct Traits {
    f0: f64,
    levels: Vec<f64>,
    rate: f64,
    verbosity: f64,
    lexical: [f64; 2],
    centroid: Vec<f64>,
    hidden: [f64; 4],
    scores: [f64; S_DIM],
}

/// An in-memory synthetic corpus.
#[derive(Debug, Clone)]
pub struct SynthCorpus {
    spec: SynthSpec,
    seed: u64,
    records: Vec<SessionRecord>,
    lexicon: Lexicon,
    // per configuration, H_DIM x 4 loadings of the hidden latent
    hidden_loadings: Arc<Vec<Vec<f64>>>,
}

impl SynthCorpus {
    pub fn new(spec: SynthSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let mut records = Vec::with_capacity(3 * spec.couples);
        let width = spec.couples.to_string().len().max(3);
        for c in 1..=spec.couples {
            let couple_id = format!("c{c:0width$}");
            let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, &format!("labels/{couple_id}")));
            let mut draw = || {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                for (i, p) in spec.priors.iter().enumerate() {
                    acc += p;
                    if u < acc && *p > 0.0 {
                        return RiskLabel::ALL[i];
                    }
                }
                // rounding left u above the last cumulative sum
                RiskLabel::ALL[spec.priors.iter().rposition(|p| *p > 0.0).unwrap_or(0)]
            };
            let speakers = [Speaker { role: Role::Husband, risk: draw() }, Speaker { role: Role::Wife, risk: draw() }];
            for t in SessionType::ALL {
                let sid = format!("{couple_id}-{}", session_code(t));
                records.push(SessionRecord {
                    session_id: sid.clone(),
                    couple_id: couple_id.clone(),
                    session_type: t,
                    speakers,
                    duration: Millis::from_secs_f64(spec.session_s),
                    frame_period_s: spec.frame_period_s,
                    files: SessionFiles {
                        rttm: PathBuf::from(format!("rttm/{sid}.rttm")),
                        ctm: PathBuf::from(format!("ctm/{sid}.ctm")),
                        frames: PathBuf::from(format!("frames/{sid}.csv")),
                        behavior_dir: PathBuf::from("behavior"),
                        embeddings: Some(PathBuf::from(format!("embeddings/{sid}.csv"))),
                    },
                });
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, "behavior/loadings"));
        let hidden_loadings =
            (0..BEHAVIOR_CONFIGS).map(|_| (0..H_DIM * 4).map(|_| 0.5 * normal(&mut rng)).collect()).collect();
        Ok(Self { spec, seed, records, lexicon: synthetic_lexicon(), hidden_loadings: Arc::new(hidden_loadings) })
    }

    pub fn spec(&self) -> &SynthSpec {
        &self.spec
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn record(&self, session_id: &str) -> Result<&SessionRecord> {
        self.records
            .iter()
            .find(|r| r.session_id == session_id)
            .ok_or_else(|| Error::InvalidArgument(format!("no synthetic session `{session_id}`")))
    }

    fn traits(&self, couple_id: &str) -> [Traits; 2] {
        let s = &self.spec;
        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(self.seed, &format!("couple/{couple_id}")));
        let dim = s.embedding_dim;
        let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(2);
        for _ in 0..2 {
            let mut v: Vec<f64> = (0..dim).map(|_| normal(&mut rng)).collect();
            if let Some(h) = centroids.first() {
                let dot: f64 = v.iter().zip(h).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(h).for_each(|(a, b)| *a -= dot * b);
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
            v.iter_mut().for_each(|x| *x /= norm);
            centroids.push(v);
        }
        let mut out = Vec::with_capacity(2);
        for (i, centroid) in centroids.into_iter().enumerate() {
            // Husband pitch in [90, 135] Hz, Wife in [170, 250] Hz
            let f0 = if i == 0 { 90.0 + 45.0 * rng.gen::<f64>() } else { 170.0 + 80.0 * rng.gen::<f64>() };
            let levels = (1..s.channels).map(|_| s.noise.speaker * normal(&mut rng)).collect();
            let rate = 2.2 + 0.8 * rng.gen::<f64>();
            let verbosity = 0.25 * normal(&mut rng);
            let lexical = [0.3 * normal(&mut rng), 0.3 * normal(&mut rng)];
            let hidden = std::array::from_fn(|_| normal(&mut rng));
            let scores = std::array::from_fn(|_| 0.8 * normal(&mut rng));
            out.push(Traits { f0, levels, rate, verbosity, lexical, centroid, hidden, scores });
        }
        let w = out.pop().expect("two speakers");
        let h = out.pop().expect("two speakers");
        [h, w]
    }

    /// The session with role-tagged segments, regardless of
    /// `anonymous_tags`.
    pub fn reference(&self, session_id: &str) -> Result<SessionData> {
        let record = self.record(session_id)?;
        Ok(self.generate(record))
    }

    fn generate(&self, record: &SessionRecord) -> SessionData {
        let s = &self.spec;
        let traits = self.traits(&record.couple_id);
        let degree = [record.speakers[0].risk.degree() as f64, record.speakers[1].risk.degree() as f64];
        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(self.seed, &format!("session/{}", record.session_id)));

        let (segments, words) = self.conversation(&traits, degree, record.duration, &mut rng);
        let frames = self.frames(&traits, degree, &segments, record.duration, &mut rng);
        let embeddings = segments
            .segments()
            .iter()
            .map(|seg| {
                let t = &traits[role_index(Role::from_tag(&seg.tag).expect("role tag"))];
                t.centroid.iter().map(|c| quantize(c + s.noise.embedding * normal(&mut rng), 64.0)).collect()
            })
            .collect();
        let mut behavior = BTreeMap::new();
        for role in Role::BOTH {
            let i = role_index(role);
            behavior.insert(role, self.behavior(&traits[i], degree[i], &mut rng));
        }
        SessionData { segments, words, frames, embeddings: Some(embeddings), behavior }
    }

    // Alternating turns with occasional holds; each turn is one to three
    // segments separated by gaps shorter than the default merge gap.
    fn conversation(
        &self,
        traits: &[Traits; 2],
        degree: [f64; 2],
        duration: Millis,
        rng: &mut ChaCha8Rng,
    ) -> (SegmentSet, WordAlignment) {
        let e = self.spec.effects;
        let end_limit = duration.0 - 500;
        let mut t = 500i64;
        let mut who = rng.gen_range(0..2usize);
        let mut drift = [normal(rng), normal(rng)];
        let mut segments = Vec::new();
        let mut words = Vec::new();
        let mut spoke = [false; 2];
        loop {
            drift[who] = 0.8 * drift[who] + 0.6 * normal(rng);
            let swing = WORDS_SD * e.turn_taking * degree[who];
            let n = WORDS_PER_TURN * traits[who].verbosity.exp() + WORDS_SD * normal(rng) + swing * drift[who];
            let n_words = (n.round().max(1.0) as usize).min(150);
            let speech_s = (n_words as f64 / traits[who].rate * (0.25 * normal(rng)).exp()).clamp(0.5, 30.0);
            let pieces = 1 + usize::from(rng.gen::<f64>() < 0.4) + usize::from(rng.gen::<f64>() < 0.15);
            let speech_ms = (speech_s * 1000.0).round() as i64;
            let gaps: Vec<i64> = (1..pieces).map(|_| rng.gen_range(100..=400)).collect();
            let total = speech_ms + gaps.iter().sum::<i64>();
            if t + total > end_limit {
                if spoke[0] && spoke[1] {
                    break;
                }
                // too little room left for the silent partner: one short turn
                who = usize::from(!spoke[1]);
                let room = (end_limit - t).max(600);
                let seg = Segment::new(Millis(t), Millis(room.min(2000)), Role::BOTH[who].tag());
                words.push(Word {
                    start: seg.start,
                    dur: Millis(300.min(seg.dur.0)),
                    token: "okay".into(),
                    confidence: 1.0,
                });
                segments.push(seg);
                break;
            }
            spoke[who] = true;
            // split the speech time into pieces of roughly equal share
            let weights: Vec<f64> = (0..pieces).map(|_| 0.5 + rng.gen::<f64>()).collect();
            let wsum: f64 = weights.iter().sum();
            let mut lens: Vec<i64> =
                weights.iter().map(|w| ((w / wsum) * speech_ms as f64).round().max(200.0) as i64).collect();
            let drift_ms = lens.iter().sum::<i64>() - speech_ms;
            if let Some(last) = lens.last_mut() {
                *last = (*last - drift_ms).max(200);
            }
            let mut spans = Vec::with_capacity(pieces);
            let mut cursor = t;
            for (i, len) in lens.iter().enumerate() {
                spans.push((cursor, *len));
                cursor += len + gaps.get(i).copied().unwrap_or(0);
            }
            let speech_total: i64 = lens.iter().sum();
            let slot = speech_total as f64 / n_words as f64;
            for k in 0..n_words {
                // position k in concatenated speech time, mapped onto a span
                let mut pos = ((k as f64 + 0.1) * slot) as i64;
                let mut placed = None;
                for &(st, len) in &spans {
                    if pos < len {
                        let dur = ((0.8 * slot) as i64).clamp(1, len - pos);
                        placed = Some((st + pos, dur));
                        break;
                    }
                    pos -= len;
                }
                let (start, dur) = placed.unwrap_or_else(|| {
                    let &(st, len) = spans.last().expect("one span");
                    (st + len - 1, 1)
                });
                let token = self.token(degree[who], traits[who].lexical, rng);
                let confidence = if rng.gen::<f64>() < 0.9 { 1.0 } else { 0.75 };
                words.push(Word { start: Millis(start), dur: Millis(dur), token: token.into(), confidence });
            }
            for &(st, len) in &spans {
                segments.push(Segment::new(Millis(st), Millis(len), Role::BOTH[who].tag()));
            }
            t = cursor + rng.gen_range(600..=1500);
            if rng.gen::<f64>() < 0.85 {
                who = 1 - who;
            }
        }
        (SegmentSet::new(segments), WordAlignment::new(words))
    }

    fn token(&self, degree: f64, offsets: [f64; 2], rng: &mut ChaCha8Rng) -> &'static str {
        let l = self.spec.effects.lexical;
        let p_pos = 0.05 * (offsets[0] - l * degree).exp();
        let p_neg = 0.03 * (offsets[1] + l * degree).exp();
        let u: f64 = rng.gen();
        if u < p_pos {
            POSITIVE_WORDS[rng.gen_range(0..POSITIVE_WORDS.len())]
        } else if u < p_pos + p_neg {
            NEGATIVE_WORDS[rng.gen_range(0..NEGATIVE_WORDS.len())]
        } else {
            NEUTRAL_WORDS[rng.gen_range(0..NEUTRAL_WORDS.len())]
        }
    }

    fn frames(
        &self,
        traits: &[Traits; 2],
        degree: [f64; 2],
        segments: &SegmentSet,
        duration: Millis,
        rng: &mut ChaCha8Rng,
    ) -> FrameMatrix {
        let s = &self.spec;
        let d = s.channels;
        let n = (duration.as_secs() / s.frame_period_s).floor() as usize;
        let names = channel_names(d);
        // speaker of each frame, by frame midpoint
        let mut owner: Vec<Option<usize>> = vec![None; n];
        for seg in segments.segments() {
            let who = role_index(Role::from_tag(&seg.tag).expect("role tag"));
            let lo = ((seg.start.as_secs() / s.frame_period_s) - 0.5).ceil().max(0.0) as usize;
            let hi = ((seg.end().as_secs() / s.frame_period_s) - 0.5).ceil().max(0.0) as usize;
            for slot in owner.iter_mut().take(hi.min(n)).skip(lo) {
                *slot = Some(who);
            }
        }
        let offsets: [Vec<f64>; 2] = std::array::from_fn(|_| (1..d).map(|_| s.noise.session * normal(rng)).collect());
        let mut values = Vec::with_capacity(n * d);
        for who in owner {
            match who {
                Some(w) => {
                    let tr = &traits[w];
                    let voiced = rng.gen::<f64>() < 0.8;
                    values.push(if voiced { quantize(tr.f0 * (0.06 * normal(rng)).exp(), 16.0) } else { 0.0 });
                    for c in 1..d {
                        let shift = if c % 4 == 1 { s.effects.acoustic * degree[w] } else { 0.0 };
                        let v = tr.levels[c - 1] + offsets[w][c - 1] + shift + s.noise.frame * normal(rng);
                        values.push(quantize(v, 16.0));
                    }
                }
                None => {
                    values.push(0.0);
                    for _ in 1..d {
                        values.push(quantize(-3.0 + 0.25 * s.noise.frame * normal(rng), 16.0));
                    }
                }
            }
        }
        FrameMatrix::new(s.frame_period_s, names, values).expect("frame shape is consistent")
    }

    fn behavior(&self, tr: &Traits, degree: f64, rng: &mut ChaCha8Rng) -> BehaviorSet {
        let s = &self.spec;
        let noise = s.noise.behavior;
        let hidden: [f64; 4] = std::array::from_fn(|k| tr.hidden[k] + s.noise.session * normal(rng));
        let mut latent: [f64; S_DIM] = std::array::from_fn(|k| tr.scores[k] + s.noise.session * normal(rng));
        // Acceptance, Blame, Positive, Negative, Sadness
        latent[4] -= s.effects.behavior * degree;
        let mut set = BehaviorSet::default();
        for (i, loadings) in self.hidden_loadings.iter().enumerate() {
            let cfg = i + 1;
            let h = (0..H_DIM)
                .map(|j| {
                    let v: f64 = (0..4).map(|k| loadings[j * 4 + k] * hidden[k]).sum();
                    quantize(v + 0.2 * noise * normal(rng), 64.0)
                })
                .collect();
            let sv = (0..S_DIM)
                .map(|k| {
                    let loading = match (k, cfg) {
                        (4, 18) => 1.0,
                        (4, 17) => 0.8,
                        (4, _) => 0.25,
                        _ => 0.6,
                    };
                    let mut v = loading * latent[k] + noise * normal(rng);
                    if (k, cfg) == (2, 18) {
                        v -= 0.5 * s.effects.behavior * degree;
                    }
                    quantize(v, 64.0)
                })
                .collect();
            set.configs.insert(cfg, BehaviorConfig { h, s: sv });
        }
        set
    }
}

impl SessionSource for SynthCorpus {
    fn records(&self) -> &[SessionRecord] {
        &self.records
    }

    fn load(&self, record: &SessionRecord) -> Result<SessionData> {
        let mut data = self.generate(record);
        if self.spec.anonymous_tags {
            let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(self.seed, &format!("tags/{}", record.session_id)));
            let flip = rng.gen::<bool>();
            let tags: Vec<&str> = data
                .segments
                .segments()
                .iter()
                .map(|seg| if (seg.tag == Role::Husband.tag()) != flip { "spk1" } else { "spk2" })
                .collect();
            data.segments = data.segments.retagged(&tags);
        }
        Ok(data)
    }

    fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }
}

/// Writes the corpus under `dir`: `manifest.jsonl`, `lexicon.txt`,
/// `synth.json` and per-session `rttm/`, `ctm/`, `frames/`, `embeddings/`
/// and `behavior/` files. Returns the manifest path.
pub fn write_corpus(corpus: &SynthCorpus, dir: &Path) -> Result<PathBuf> {
    for sub in ["rttm", "ctm", "frames", "embeddings", "behavior"] {
        let p = dir.join(sub);
        std::fs::create_dir_all(&p).map_err(|e| Error::io(&p, e))?;
    }
    let write = |path: PathBuf, text: String| std::fs::write(&path, text).map_err(|e| Error::io(&path, e));
    corpus.records.par_iter().try_for_each(|r| -> Result<()> {
        let data = corpus.load(r)?;
        let sid = &r.session_id;
        write(dir.join(&r.files.rttm), write_rttm(sid, &data.segments))?;
        write(dir.join(&r.files.ctm), write_ctm(sid, &data.words))?;
        write(dir.join(&r.files.frames), write_frames(&data.frames))?;
        if let (Some(path), Some(emb)) = (&r.files.embeddings, &data.embeddings) {
            write(dir.join(path), write_segment_embeddings(emb))?;
        }
        for (role, set) in &data.behavior {
            write_behavior(&dir.join(&r.files.behavior_dir), sid, *role, set)?;
        }
        Ok(())
    })?;
    let mut manifest = String::new();
    for r in &corpus.records {
        manifest.push_str(&write_manifest_line(r, dir));
        manifest.push('\n');
    }
    let manifest_path = dir.join("manifest.jsonl");
    write(manifest_path.clone(), manifest)?;
    write(dir.join("lexicon.txt"), write_lexicon(&corpus.lexicon))?;
    let meta = serde_json::json!({ "seed": corpus.seed, "spec": corpus.spec });
    write(dir.join("synth.json"), serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(manifest_path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{canonical_dump, validate, DiskCorpus};
    use crate::diarization::{diarization_error_rate, diarize_session};

    fn small() -> SynthSpec {
        SynthSpec { couples: 6, session_s: 120.0, ..SynthSpec::default() }
    }

    fn dump_dir(dir: &Path) -> Vec<(String, Vec<u8>)> {
        let mut out = Vec::new();
        for entry in walk(dir) {
            let rel = entry.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
            out.push((rel, std::fs::read(&entry).unwrap()));
        }
        out.sort();
        out
    }

    fn walk(dir: &Path) -> Vec<PathBuf> {
        let mut files = Vec::new();
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                files.extend(walk(&p));
            } else {
                files.push(p);
            }
        }
        files
    }

    #[test]
    fn same_seed_writes_identical_files() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        write_corpus(&SynthCorpus::new(small(), 3).unwrap(), a.path()).unwrap();
        write_corpus(&SynthCorpus::new(small(), 3).unwrap(), b.path()).unwrap();
        let (da, db) = (dump_dir(a.path()), dump_dir(b.path()));
        assert!(da.len() > 4 * 18);
        assert!(da == db);
        let c = tempfile::tempdir().unwrap();
        write_corpus(&SynthCorpus::new(small(), 4).unwrap(), c.path()).unwrap();
        assert!(dump_dir(c.path()) != da);
    }

    #[test]
    fn disk_round_trip_matches_memory() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = SynthCorpus::new(small(), 11).unwrap();
        let manifest = write_corpus(&corpus, dir.path()).unwrap();
        let disk = DiskCorpus::open(&manifest, &dir.path().join("lexicon.txt")).unwrap();
        let report = validate(&disk);
        assert!(report.is_ok(), "{:?}", report.errors);
        assert!(report.warnings.is_empty(), "{:?}", report.warnings);
        assert_eq!(disk.records().len(), 18);
        let (a, b) = (canonical_dump(&disk).unwrap(), canonical_dump(&corpus).unwrap());
        for (x, y) in a.lines().zip(b.lines()) {
            let mut x: serde_json::Value = serde_json::from_str(x).unwrap();
            let mut y: serde_json::Value = serde_json::from_str(y).unwrap();
            x["record"]["files"].take();
            y["record"]["files"].take();
            assert_eq!(x, y);
        }
    }

    #[test]
    fn labels_follow_priors() {
        let spec = SynthSpec { couples: 400, ..SynthSpec::default() };
        let corpus = SynthCorpus::new(spec.clone(), 1).unwrap();
        let mut counts = [0usize; 3];
        for r in corpus.records().iter().step_by(3) {
            for s in r.speakers {
                counts[s.risk.degree() as usize] += 1;
            }
        }
        let n = 800.0;
        for (k, &c) in counts.iter().enumerate() {
            let p = spec.priors[k];
            let sd = (n * p * (1.0 - p)).sqrt();
            assert!((c as f64 - n * p).abs() < 4.0 * sd, "class {k}: {c} of {n}");
        }
    }

    #[test]
    fn one_class_prior_is_honoured() {
        let spec = SynthSpec { couples: 5, priors: [0.0, 1.0, 0.0], ..small() };
        let corpus = SynthCorpus::new(spec, 2).unwrap();
        assert!(corpus.records().iter().all(|r| r.speakers.iter().all(|s| s.risk == RiskLabel::Ideation)));
    }

    #[test]
    fn impossible_specs_are_rejected() {
        let zero = SynthSpec { priors: [0.0; 3], ..small() };
        assert!(SynthCorpus::new(zero, 0).unwrap_err().to_string().contains("no mass"));
        for bad in [
            SynthSpec { couples: 0, ..small() },
            SynthSpec { priors: [0.5, 0.5, 0.5], ..small() },
            SynthSpec { priors: [1.2, -0.2, 0.0], ..small() },
            SynthSpec { channels: 1, ..small() },
            SynthSpec { frame_period_s: 0.0, ..small() },
            SynthSpec { session_s: 5.0, ..small() },
            SynthSpec { effects: Effects { lexical: -1.0, ..Effects::STRONG }, ..small() },
        ] {
            assert!(SynthCorpus::new(bad, 0).is_err());
        }
    }

    #[test]
    fn sessions_are_well_formed() {
        let corpus = SynthCorpus::new(small(), 5).unwrap();
        for r in corpus.records() {
            let d = corpus.load(r).unwrap();
            assert!(d.segments.overlaps().is_empty(), "{}", r.session_id);
            let last = d.segments.segments().last().unwrap();
            assert!(last.end() <= r.duration, "{}", r.session_id);
            for role in Role::BOTH {
                assert!(d.segments.tags().contains(&role.tag()), "{} lacks {role}", r.session_id);
            }
            assert_eq!(d.embeddings.as_ref().unwrap().len(), d.segments.len());
            assert_eq!(d.frames.channels(), 38);
            assert_eq!(d.behavior.len(), 2);
        }
    }

    #[test]
    fn husband_pitch_is_lower() {
        let corpus = SynthCorpus::new(small(), 8).unwrap();
        for r in corpus.records() {
            let d = corpus.load(r).unwrap();
            let labels: Vec<usize> =
                d.segments.segments().iter().map(|s| usize::from(Role::from_tag(&s.tag) == Some(Role::Wife))).collect();
            let roles = crate::diarization::assign_roles(&d.segments, &labels, &d.frames).unwrap();
            assert_eq!(roles.roles, [Role::Husband, Role::Wife], "{}", r.session_id);
            assert!(roles.median_f0[0] < roles.median_f0[1]);
        }
    }

    #[test]
    fn anonymous_tags_are_recovered_by_diarization() {
        let spec = SynthSpec { anonymous_tags: true, ..small() };
        let corpus = SynthCorpus::new(spec, 9).unwrap();
        let mut flipped = 0;
        for r in corpus.records() {
            let d = corpus.load(r).unwrap();
            assert!(d.segments.tags().iter().all(|t| *t == "spk1" || *t == "spk2"));
            let truth = corpus.reference(&r.session_id).unwrap();
            flipped += usize::from(d.segments.segments()[0].tag == "spk2")
                ^ usize::from(truth.segments.segments()[0].tag == "W");
            let res = diarize_session(&d.segments, d.embeddings.as_ref().unwrap(), &d.frames, 0.5, 1).unwrap();
            let der = diarization_error_rate(&res.role_tagged(), &truth.segments, Millis(250)).unwrap();
            assert_eq!(der.der(), 0.0, "{}", r.session_id);
        }
        assert!(flipped > 0 && flipped < corpus.records().len());
    }

    #[test]
    fn null_spec_has_no_effects() {
        assert_eq!(SynthSpec::null().effects, Effects::NONE);
        let json = serde_json::to_string(&SynthSpec::default()).unwrap();
        let back: SynthSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, SynthSpec::default());
    }

    #[test]
    fn channel_names_cover_the_pitch_channel() {
        let names = channel_names(38);
        assert_eq!(names.len(), 38);
        assert_eq!(names[0], PITCH_CHANNEL);
        let mut unique = names.clone();
        unique.sort();
        unique.dedup();
        assert_eq!(unique.len(), 38);
        assert_eq!(channel_names(60).len(), 60);
    }
}
