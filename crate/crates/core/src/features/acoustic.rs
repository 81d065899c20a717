use std::sync::Arc;

use super::functionals::{self, ACOUSTIC_FUNCTIONALS};
use super::{Family, FeatureBlock};
use crate::corpus::{FrameMatrix, Role, SegmentSet};
use crate::error::{Error, Result};

/// Six functionals of every channel over the frames inside `role`'s
/// segments. A frame covered by several segments counts once.
pub fn extract_acoustic(frames: &FrameMatrix, segments: &SegmentSet, role: Role) -> Result<FeatureBlock> {
    let mut inside = vec![false; frames.frames()];
    for s in segments.segments().iter().filter(|s| Role::from_tag(&s.tag) == Some(role)) {
        for t in frames.frames_in(s.start, s.end()) {
            inside[t] = true;
        }
    }
    let rows: Vec<usize> = (0..frames.frames()).filter(|&t| inside[t]).collect();
    if rows.is_empty() {
        return Err(Error::Feature(format!("no frames inside the {role}'s segments")));
    }
    let d = frames.channels();
    let mut names = Vec::with_capacity(6 * d);
    let mut values = Vec::with_capacity(6 * d);
    let mut column = Vec::with_capacity(rows.len());
    for (c, ch) in frames.channel_names().iter().enumerate() {
        column.clear();
        column.extend(rows.iter().map(|&t| frames.row(t)[c]));
        let f = functionals::acoustic(&column);
        for (func, v) in ACOUSTIC_FUNCTIONALS.iter().zip(f) {
            names.push(format!("A.{ch}.{func}"));
            values.push(v);
        }
    }
    let names: Arc<[String]> = names.into();
    FeatureBlock::new(Family::A, names, values, Vec::new())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Segment;
    use crate::time::Millis;

    #[test]
    fn speaker_frames_only() {
        // 10 frames of 0.1 s; H speaks 0-0.5 s, W 0.5-1.0 s
        let mut vals = Vec::new();
        for t in 0..10 {
            vals.extend([if t < 5 { 100.0 } else { 200.0 }, t as f64]);
        }
        let fm = FrameMatrix::new(0.1, vec!["F0".into(), "energy".into()], vals).unwrap();
        let segs = SegmentSet::new(vec![
            Segment::new(Millis(0), Millis(500), "H"),
            Segment::new(Millis(100), Millis(200), "H"),
            Segment::new(Millis(500), Millis(500), "W"),
        ]);
        let h = extract_acoustic(&fm, &segs, Role::Husband).unwrap();
        assert_eq!(h.len(), 12);
        assert_eq!(h.get("A.F0.mean"), Some(100.0));
        assert_eq!(h.get("A.energy.mean"), Some(2.0));
        assert_eq!(h.get("A.energy.range"), Some(4.0));
        assert_eq!(h.names[6], "A.energy.mean");
        let w = extract_acoustic(&fm, &segs, Role::Wife).unwrap();
        assert_eq!(w.get("A.energy.median"), Some(7.0));
    }

    #[test]
    fn thirty_eight_channels_give_228() {
        let mut names = vec!["F0".to_string()];
        names.extend((1..38).map(|i| format!("lld{i}")));
        let fm = FrameMatrix::new(0.01, names, vec![1.0; 38 * 100]).unwrap();
        let segs = SegmentSet::new(vec![Segment::new(Millis(0), Millis(1000), "W")]);
        assert_eq!(extract_acoustic(&fm, &segs, Role::Wife).unwrap().len(), 228);
        assert!(extract_acoustic(&fm, &segs, Role::Husband).is_err());
    }
}
