use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};

/// Pairwise segment similarity. Symmetric; unit diagonal until pruned.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix(Matrix);

impl AffinityMatrix {
    pub fn from_matrix(m: Matrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Diarization("affinity matrix must be square".into()));
        }
        if !m.is_symmetric(1e-12) {
            return Err(Error::Diarization("affinity matrix must be symmetric".into()));
        }
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.0.rows() == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }
}

/// Cosine similarity between every pair of segment embeddings.
pub fn cosine_affinity(embeddings: &[Vec<f64>]) -> Result<AffinityMatrix> {
    if embeddings.len() < 2 {
        return Err(Error::Diarization(format!("need at least 2 embeddings, got {}", embeddings.len())));
    }
    let dim = embeddings[0].len();
    let mut norms = Vec::with_capacity(embeddings.len());
    for (i, e) in embeddings.iter().enumerate() {
        if e.len() != dim {
            return Err(Error::Diarization(format!("segment {i}: embedding dimension {} differs from {dim}", e.len())));
        }
        let n = dot(e, e).sqrt();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::Diarization(format!("segment {i}: embedding has zero norm")));
        }
        norms.push(n);
    }
    let n = embeddings.len();
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = 1.0;
        for j in (i + 1)..n {
            let c = (dot(&embeddings[i], &embeddings[j]) / (norms[i] * norms[j])).clamp(-1.0, 1.0);
            m[(i, j)] = c;
            m[(j, i)] = c;
        }
    }
    Ok(AffinityMatrix(m))
}

/// Keeps the `ceil(p * n)` largest entries of every row (ties to the lower
/// column index), zeroes the rest, then symmetrizes by elementwise max.
pub fn prune_affinity(affinity: &AffinityMatrix, p: f64) -> Result<AffinityMatrix> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Diarization(format!("pruning parameter p must be in (0, 1], got {p}")));
    }
    let n = affinity.len();
    let keep = ((p * n as f64).ceil() as usize).clamp(1, n);
    let a = affinity.matrix();
    let mut pruned = Matrix::zeros(n, n);
    let mut order: Vec<usize> = (0..n).collect();
    for i in 0..n {
        let row = a.row(i);
        order.sort_by(|&x, &y| row[y].total_cmp(&row[x]).then(x.cmp(&y)));
        for &j in &order[..keep] {
            pruned[(i, j)] = row[j];
        }
    }
    let mut sym = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            sym[(i, j)] = pruned[(i, j)].max(pruned[(j, i)]);
        }
    }
    Ok(AffinityMatrix(sym))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_vectors_give_all_ones() {
        let a = cosine_affinity(&[vec![1.0, 2.0], vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((a.get(i, j) - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn orthogonal_pair() {
        let a = cosine_affinity(&[vec![1.0, 0.0], vec![0.0, 3.0]]).unwrap();
        assert_eq!(a.get(0, 1), 0.0);
    }

    #[test]
    fn forty_five_degrees() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let a = cosine_affinity(&[vec![1.0, 0.0], vec![s, s]]).unwrap();
        assert!((a.get(0, 1) - s).abs() < 1e-15);
    }

    #[test]
    fn zero_norm_names_segment() {
        let err = cosine_affinity(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap_err();
        assert!(err.to_string().contains("segment 1"), "{err}");
    }

    #[test]
    fn prune_keep_all_is_identity() {
        let a = cosine_affinity(&[vec![1.0, 0.2], vec![0.3, 1.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(prune_affinity(&a, 1.0).unwrap(), a);
    }

    #[test]
    fn prune_three_by_three_row() {
        let m = Matrix::from_rows(&[[1.0, 0.9, 0.1], [0.9, 1.0, 0.2], [0.1, 0.2, 1.0]]);
        let a = AffinityMatrix::from_matrix(m).unwrap();
        let p = prune_affinity(&a, 0.34).unwrap();
        // ceil(1.02) = 2 per row: row 0 keeps (1.0, 0.9), row 2 keeps (0.2, 1.0)
        // 0.1 is dropped by both rows 0 and 2, 0.2 survives via row 2
        assert_eq!(p.matrix().row(0), &[1.0, 0.9, 0.0]);
        assert_eq!(p.matrix().row(1), &[0.9, 1.0, 0.2]);
        assert_eq!(p.matrix().row(2), &[0.0, 0.2, 1.0]);
    }

    #[test]
    fn prune_ties_prefer_lower_column() {
        let m = Matrix::from_rows(&[[1.0; 4]; 4]);
        let a = AffinityMatrix::from_matrix(m).unwrap();
        let p = prune_affinity(&a, 0.25).unwrap();
        // each row keeps column 0 only; max-symmetrization adds row 0 entries
        assert!(p.matrix().is_symmetric(0.0));
        assert_eq!(p.matrix().row(0), &[1.0; 4]);
        assert_eq!(p.matrix().row(2), &[1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn prune_rejects_bad_p() {
        let a = cosine_affinity(&[vec![1.0], vec![2.0]]).unwrap();
        assert!(prune_affinity(&a, 0.0).is_err());
        assert!(prune_affinity(&a, 1.5).is_err());
    }
}
