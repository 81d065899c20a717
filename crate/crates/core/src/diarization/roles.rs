use serde::Serialize;

use crate::corpus::{FrameMatrix, Role, SegmentSet};
use crate::error::{Error, Result};

/// Cluster-to-role map produced from pitch medians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RoleAssignment {
    /// `roles[c]` is the role of cluster `c`.
    pub roles: [Role; 2],
    pub median_f0: [f64; 2],
    /// The medians were equal and the earlier-speaking cluster became Husband.
    pub tied: bool,
}

impl RoleAssignment {
    pub fn role_of(&self, cluster: usize) -> Role {
        self.roles[cluster]
    }
}

/// Median of a non-empty slice (mean of the two middle values for even length).
fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// The cluster with the lower median voiced F0 is the Husband.
///
/// A frame counts once per cluster even if several of that cluster's
/// segments cover it.
pub fn assign_roles(segments: &SegmentSet, labels: &[usize], frames: &FrameMatrix) -> Result<RoleAssignment> {
    if labels.len() != segments.len() {
        return Err(Error::Diarization(format!("{} labels for {} segments", labels.len(), segments.len())));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l > 1) {
        return Err(Error::Diarization(format!("cluster index {bad} outside {{0, 1}}")));
    }
    let mut covered = vec![[false; 2]; frames.frames()];
    let mut first_start = [None; 2];
    for (seg, &c) in segments.segments().iter().zip(labels) {
        first_start[c] = first_start[c].or(Some(seg.start));
        for t in frames.frames_in(seg.start, seg.end()) {
            covered[t][c] = true;
        }
    }
    let mut medians = [0.0; 2];
    for c in 0..2 {
        let mut voiced: Vec<f64> =
            (0..frames.frames()).filter(|&t| covered[t][c]).map(|t| frames.f0(t)).filter(|&f| f > 0.0).collect();
        if voiced.is_empty() {
            return Err(Error::Diarization(format!("role assignment undetermined: cluster {c} has no voiced frames")));
        }
        medians[c] = median(&mut voiced);
    }
    let tied = medians[0] == medians[1];
    let husband = if tied {
        log::warn!("equal median pitch {} Hz in both clusters; earlier speaker taken as Husband", medians[0]);
        if first_start[1] < first_start[0] {
            1
        } else {
            0
        }
    } else if medians[0] < medians[1] {
        0
    } else {
        1
    };
    let mut roles = [Role::Wife; 2];
    roles[husband] = Role::Husband;
    Ok(RoleAssignment { roles, median_f0: medians, tied })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Segment;
    use crate::time::Millis;

    // 10 ms frames, one channel F0 from a closure over time in seconds
    fn frames(secs: f64, f0: impl Fn(f64) -> f64) -> FrameMatrix {
        let n = (secs * 100.0) as usize;
        let vals = (0..n).map(|t| f0((t as f64 + 0.5) / 100.0)).collect();
        FrameMatrix::new(0.01, vec!["F0".into()], vals).unwrap()
    }

    fn two_speakers() -> SegmentSet {
        SegmentSet::new(vec![
            Segment::new(Millis(0), Millis(2000), "a"),
            Segment::new(Millis(2000), Millis(2000), "b"),
            Segment::new(Millis(4000), Millis(2000), "a"),
        ])
    }

    #[test]
    fn lower_median_is_husband() {
        // cluster 0 (a): 208 Hz, cluster 1 (b): 118 Hz
        let fm = frames(6.0, |t| if (2.0..4.0).contains(&t) { 118.0 } else { 208.0 });
        let r = assign_roles(&two_speakers(), &[0, 1, 0], &fm).unwrap();
        assert_eq!(r.roles, [Role::Wife, Role::Husband]);
        assert_eq!(r.median_f0, [208.0, 118.0]);
        assert!(!r.tied);
    }

    #[test]
    fn unvoiced_frames_ignored() {
        let fm = frames(6.0, |t| {
            if (2.0..4.0).contains(&t) {
                if t < 3.5 {
                    0.0
                } else {
                    250.0
                }
            } else {
                120.0
            }
        });
        let r = assign_roles(&two_speakers(), &[0, 1, 0], &fm).unwrap();
        assert_eq!(r.median_f0[1], 250.0);
        assert_eq!(r.roles[0], Role::Husband);
    }

    #[test]
    fn tie_goes_to_earlier_speaker() {
        let fm = frames(6.0, |_| 150.0);
        let r = assign_roles(&two_speakers(), &[1, 0, 1], &fm).unwrap();
        assert!(r.tied);
        assert_eq!(r.roles, [Role::Wife, Role::Husband]);
    }

    #[test]
    fn silent_cluster_is_an_error() {
        let fm = frames(6.0, |t| if (2.0..4.0).contains(&t) { 0.0 } else { 180.0 });
        let err = assign_roles(&two_speakers(), &[0, 1, 0], &fm).unwrap_err();
        assert!(err.to_string().contains("role assignment undetermined"));
    }

    #[test]
    fn scaling_pitch_preserves_roles() {
        let fm = frames(6.0, |t| 100.0 + 40.0 * (t * 3.0).sin() + if t >= 2.0 && t < 4.0 { 90.0 } else { 0.0 });
        let base = assign_roles(&two_speakers(), &[0, 1, 0], &fm).unwrap();
        for k in [0.01, 0.5, 3.0, 1e4] {
            assert_eq!(assign_roles(&two_speakers(), &[0, 1, 0], &fm.scaled_f0(k)).unwrap().roles, base.roles);
        }
    }
}
