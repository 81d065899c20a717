use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::time::Millis;

pub const PITCH_CHANNEL: &str = "F0";

/// A `T x D` matrix of frame-level descriptors, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameMatrix {
    frame_period_s: f64,
    channel_names: Vec<String>,
    values: Vec<f64>,
    f0_index: usize,
}

impl FrameMatrix {
    pub fn new(frame_period_s: f64, channel_names: Vec<String>, values: Vec<f64>) -> Result<Self> {
        if !(frame_period_s > 0.0 && frame_period_s.is_finite()) {
            return Err(Error::InvalidArgument(format!("frame period must be positive, got {frame_period_s}")));
        }
        let f0_index = channel_names
            .iter()
            .position(|c| c == PITCH_CHANNEL)
            .ok_or_else(|| Error::Feature("pitch channel required (no `F0` column)".into()))?;
        let d = channel_names.len();
        if values.len() % d != 0 {
            return Err(Error::InvalidArgument("frame values are not a whole number of rows".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("frame values must be finite".into()));
        }
        if values.iter().skip(f0_index).step_by(d).any(|&v| v < 0.0) {
            return Err(Error::InvalidArgument("F0 values must be >= 0".into()));
        }
        Ok(Self { frame_period_s, channel_names, values, f0_index })
    }

    pub fn frame_period_s(&self) -> f64 {
        self.frame_period_s
    }

    pub fn channel_names(&self) -> &[String] {
        &self.channel_names
    }

    pub fn channels(&self) -> usize {
        self.channel_names.len()
    }

    pub fn frames(&self) -> usize {
        self.values.len() / self.channel_names.len()
    }

    pub fn f0_index(&self) -> usize {
        self.f0_index
    }

    pub fn row(&self, t: usize) -> &[f64] {
        let d = self.channels();
        &self.values[t * d..(t + 1) * d]
    }

    pub fn f0(&self, t: usize) -> f64 {
        self.values[t * self.channels() + self.f0_index]
    }

    /// Frame indices whose centre `(t + 0.5) * period` lies in `[start, end)`.
    pub fn frames_in(&self, start: Millis, end: Millis) -> std::ops::Range<usize> {
        let p = self.frame_period_s;
        let lo = ((start.as_secs() / p) - 0.5).ceil().max(0.0) as usize;
        let hi = ((end.as_secs() / p) - 0.5).ceil().max(0.0) as usize;
        let t = self.frames();
        lo.min(t)..hi.min(t)
    }

    pub fn scaled_f0(&self, factor: f64) -> FrameMatrix {
        let mut out = self.clone();
        let d = out.channels();
        for t in 0..out.frames() {
            out.values[t * d + out.f0_index] *= factor;
        }
        out
    }

    pub(crate) fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Reads a frame CSV: a header row of channel names, then one numeric row
/// per frame. The frame period comes from the manifest.
pub fn parse_frames(path: &Path, frame_period_s: f64) -> Result<FrameMatrix> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_frames_str(&text, frame_period_s, path)
}

pub fn parse_frames_str(text: &str, frame_period_s: f64, origin: &Path) -> Result<FrameMatrix> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::parse(origin, 1, "empty frame file"))?;
    let channel_names: Vec<String> = header.split(',').map(|c| c.trim().to_string()).collect();
    if !channel_names.iter().any(|c| c == PITCH_CHANNEL) {
        return Err(Error::parse(origin, 1, "pitch channel required (no `F0` column)"));
    }
    let d = channel_names.len();
    let mut values = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let before = values.len();
        for cell in line.split(',') {
            let v: f64 = cell
                .trim()
                .parse()
                .map_err(|_| Error::parse(origin, lineno, format!("non-numeric cell `{}`", cell.trim())))?;
            values.push(v);
        }
        let got = values.len() - before;
        if got != d {
            return Err(Error::parse(origin, lineno, format!("ragged row: {got} cells, header has {d}")));
        }
    }
    FrameMatrix::new(frame_period_s, channel_names, values).map_err(|e| Error::parse(origin, 0, e.to_string()))
}

pub fn write_frames(frames: &FrameMatrix) -> String {
    let mut out = frames.channel_names.join(",");
    out.push('\n');
    for t in 0..frames.frames() {
        for (j, v) in frames.row(t).iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v:.4}");
        }
        out.push('\n');
    }
    out
}
