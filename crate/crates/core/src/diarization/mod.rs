//! Two-speaker diarization over ingested segment embeddings.
//!
//! Segments are clustered by spectral clustering of a pruned cosine
//! affinity matrix, clusters are mapped to Husband and Wife by median
//! pitch, and the pruning parameter is tuned against labelled sessions by
//! diarization error rate.

mod affinity;
mod der;
mod roles;
mod spectral;

use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::{FrameMatrix, SegmentSet};
use crate::error::{Error, Result};
use crate::seed::sub_seed;
use crate::time::Millis;

pub use affinity::{cosine_affinity, prune_affinity, AffinityMatrix};
pub use der::{diarization_error_rate, DerBreakdown, DEFAULT_COLLAR};
pub use roles::{assign_roles, RoleAssignment};
pub use spectral::{canonicalize, kmeans, laplacian, spectral_cluster, spectral_embedding, KMeans, SpectralEmbedding};

/// `{0.05, 0.10, ..., 0.95}`.
pub fn default_p_grid() -> Vec<f64> {
    (1..20).map(|k| k as f64 / 20.0).collect()
}

/// Cluster labels of segments under pruning parameter `p`.
pub fn cluster_segments(embeddings: &[Vec<f64>], p: f64, seed: u64) -> Result<Vec<usize>> {
    let affinity = prune_affinity(&cosine_affinity(embeddings)?, p)?;
    spectral_cluster(&affinity, seed)
}

#[derive(Debug, Clone, Serialize)]
pub struct DiarizationResult {
    pub labels: Vec<usize>,
    pub roles: RoleAssignment,
    pub p: f64,
    #[serde(skip)]
    pub segments: SegmentSet,
}

impl DiarizationResult {
    /// The input segments tagged `H` / `W`.
    pub fn role_tagged(&self) -> SegmentSet {
        let tags: Vec<&str> = self.labels.iter().map(|&c| self.roles.role_of(c).tag()).collect();
        self.segments.retagged(&tags)
    }
}

/// Clusters one session's segments and assigns roles from pitch.
pub fn diarize_session(
    segments: &SegmentSet,
    embeddings: &[Vec<f64>],
    frames: &FrameMatrix,
    p: f64,
    seed: u64,
) -> Result<DiarizationResult> {
    if embeddings.len() != segments.len() {
        return Err(Error::Diarization(format!("{} embeddings for {} segments", embeddings.len(), segments.len())));
    }
    let labels = cluster_segments(embeddings, p, seed)?;
    let roles = assign_roles(segments, &labels, frames)?;
    Ok(DiarizationResult { labels, roles, p, segments: segments.clone() })
}

/// A session with known speaker labels, used for tuning `p`.
#[derive(Debug, Clone)]
pub struct DevSession {
    pub session_id: String,
    /// Segment timing; tags are ignored.
    pub segments: SegmentSet,
    pub embeddings: Vec<Vec<f64>>,
    pub reference: SegmentSet,
}

/// Hypothesis segments tagged `S1` / `S2` by cluster.
pub fn cluster_tagged(segments: &SegmentSet, labels: &[usize]) -> SegmentSet {
    let tags: Vec<String> = labels.iter().map(|l| format!("S{}", l + 1)).collect();
    segments.retagged(&tags)
}

#[derive(Debug, Clone, Serialize)]
pub struct TuneReport {
    pub p: f64,
    /// `(p, mean DER)` for every grid point, in grid order.
    pub curve: Vec<(f64, f64)>,
}

/// Picks the grid value with the lowest mean DER over the dev sessions
/// (smaller `p` on ties). Per-session clustering seeds derive from `seed`
/// and the session id.
pub fn tune_p(dev: &[DevSession], grid: &[f64], collar: Millis, seed: u64) -> Result<TuneReport> {
    if dev.is_empty() {
        return Err(Error::Diarization("tuning requires at least one labelled dev session".into()));
    }
    if grid.is_empty() {
        return Err(Error::Diarization("empty p grid".into()));
    }
    let mut sessions: Vec<&DevSession> = dev.iter().collect();
    sessions.sort_by(|a, b| a.session_id.cmp(&b.session_id));
    let mut points: Vec<f64> = grid.to_vec();
    points.sort_by(f64::total_cmp);
    points.dedup();

    let curve: Vec<(f64, f64)> = points
        .par_iter()
        .map(|&p| {
            let ders: Vec<f64> = sessions
                .iter()
                .map(|s| {
                    let labels = cluster_segments(&s.embeddings, p, sub_seed(seed, &s.session_id))?;
                    let hyp = cluster_tagged(&s.segments, &labels);
                    Ok(diarization_error_rate(&hyp, &s.reference, collar)?.der())
                })
                .collect::<Result<_>>()?;
            Ok((p, ders.iter().sum::<f64>() / ders.len() as f64))
        })
        .collect::<Result<_>>()?;
    let mut best = curve[0];
    for &(p, d) in &curve[1..] {
        if d < best.1 {
            best = (p, d);
        }
    }
    Ok(TuneReport { p: best.0, curve })
}
