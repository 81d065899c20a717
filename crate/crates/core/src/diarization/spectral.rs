use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::AffinityMatrix;
use crate::error::{Error, Result};
use crate::linalg::{jacobi_eigen, squared_distance, Matrix, SymmetricEigen};

pub const KMEANS_RESTARTS: usize = 10;
const KMEANS_MAX_ITER: usize = 300;

/// Unnormalized graph Laplacian `L = D - A` with negatives in `A` clamped
/// to zero.
pub fn laplacian(affinity: &AffinityMatrix) -> Matrix {
    let a = affinity.matrix();
    let n = a.rows();
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        let mut degree = 0.0;
        for j in 0..n {
            let w = a[(i, j)].max(0.0);
            degree += w;
            l[(i, j)] = -w;
        }
        l[(i, i)] += degree;
    }
    l
}

#[derive(Debug, Clone)]
pub struct SpectralEmbedding {
    pub eigen: SymmetricEigen,
    pub laplacian: Matrix,
}

pub fn spectral_embedding(affinity: &AffinityMatrix) -> Result<SpectralEmbedding> {
    let laplacian = laplacian(affinity);
    let eigen = jacobi_eigen(&laplacian)?;
    Ok(SpectralEmbedding { eigen, laplacian })
}

/// Two-way spectral clustering: rows of the eigenvectors for the two
/// smallest Laplacian eigenvalues, clustered by seeded k-means.
///
/// Labels are canonical: the cluster of segment 0 is 0.
pub fn spectral_cluster(affinity: &AffinityMatrix, seed: u64) -> Result<Vec<usize>> {
    spectral_cluster_k(affinity, 2, seed)
}

pub(crate) fn spectral_cluster_k(affinity: &AffinityMatrix, k: usize, seed: u64) -> Result<Vec<usize>> {
    let n = affinity.len();
    if n < k {
        return Err(Error::Diarization(format!("cannot form {k} clusters from {n} segments")));
    }
    if n == k {
        return Ok((0..n).collect());
    }
    let emb = spectral_embedding(affinity)?;
    let points: Vec<Vec<f64>> = (0..n).map(|i| (0..k).map(|j| emb.eigen.vectors[(i, j)]).collect()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(kmeans(&points, k, KMEANS_RESTARTS, &mut rng).labels)
}

#[derive(Debug, Clone)]
pub struct KMeans {
    pub labels: Vec<usize>,
    pub inertia: f64,
}

/// k-means++ seeding and Lloyd iterations, best of `restarts` by inertia
/// (earliest restart wins ties). Every cluster is non-empty when there are
/// at least `k` points.
pub fn kmeans(points: &[Vec<f64>], k: usize, restarts: usize, rng: &mut impl Rng) -> KMeans {
    let mut best: Option<KMeans> = None;
    for _ in 0..restarts.max(1) {
        let run = kmeans_once(points, k, rng);
        if best.as_ref().map_or(true, |b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    let mut best = best.expect("at least one restart");
    canonicalize(&mut best.labels);
    best
}

fn kmeans_once(points: &[Vec<f64>], k: usize, rng: &mut impl Rng) -> KMeans {
    let n = points.len();
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(k);
    centers.push(points[rng.gen_range(0..n)].clone());
    let mut d2: Vec<f64> = points.iter().map(|p| squared_distance(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let idx = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(rng);
            idx[0]
        };
        centers.push(points[idx].clone());
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(squared_distance(p, centers.last().unwrap()));
        }
    }

    let mut labels = vec![0usize; n];
    for iter in 0..KMEANS_MAX_ITER {
        let mut changed = iter == 0;
        for (i, p) in points.iter().enumerate() {
            let (best, _) = centers
                .iter()
                .enumerate()
                .map(|(c, ctr)| (c, squared_distance(p, ctr)))
                .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
                .unwrap();
            if labels[i] != best {
                changed = true;
                labels[i] = best;
            }
        }
        fill_empty_clusters(points, &centers, &mut labels, k);
        let dim = points[0].len();
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            for (s, v) in sums[l].iter_mut().zip(p) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        if !changed {
            break;
        }
    }
    let inertia = points.iter().zip(&labels).map(|(p, &l)| squared_distance(p, &centers[l])).sum();
    KMeans { labels, inertia }
}

// Moves the point farthest from its centre into any empty cluster.
fn fill_empty_clusters(points: &[Vec<f64>], centers: &[Vec<f64>], labels: &mut [usize], k: usize) {
    for c in 0..k {
        if labels.iter().any(|&l| l == c) {
            continue;
        }
        let mut counts = vec![0usize; k];
        for &l in labels.iter() {
            counts[l] += 1;
        }
        let donor = (0..points.len()).filter(|&i| counts[labels[i]] > 1).max_by(|&a, &b| {
            squared_distance(&points[a], &centers[labels[a]])
                .total_cmp(&squared_distance(&points[b], &centers[labels[b]]))
                .then(b.cmp(&a))
        });
        if let Some(i) = donor {
            labels[i] = c;
        }
    }
}

/// Relabels so clusters are numbered in order of first appearance.
pub fn canonicalize(labels: &mut [usize]) {
    let mut map: Vec<Option<usize>> = Vec::new();
    let mut next = 0;
    for l in labels.iter_mut() {
        if *l >= map.len() {
            map.resize(*l + 1, None);
        }
        let id = *map[*l].get_or_insert_with(|| {
            next += 1;
            next - 1
        });
        *l = id;
    }
}
