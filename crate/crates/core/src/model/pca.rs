use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, Matrix};

pub const DEFAULT_ENERGY: f64 = 0.95;

/// Principal components of the training data, enough to retain the
/// requested share of total variance.
#[derive(Debug, Clone, PartialEq)]
pub struct Pca {
    pub mean: Vec<f64>,
    /// `d x k`, orthonormal columns.
    pub components: Matrix,
    /// Covariance eigenvalues, descending (at most `min(n, d)` of them).
    pub eigenvalues: Vec<f64>,
    pub retained: f64,
    /// All training rows were equal; projections are identically 0.
    pub degenerate: bool,
}

impl Pca {
    /// Uses the population covariance. When there are fewer rows than
    /// columns the eigenproblem is solved on the `n x n` Gram matrix instead.
    pub fn fit(train: &Matrix, energy: f64) -> Result<Self> {
        let (n, d) = (train.rows(), train.cols());
        if n < 2 {
            return Err(Error::Model(format!("PCA needs at least 2 training rows, got {n}")));
        }
        if !(energy > 0.0 && energy <= 1.0) {
            return Err(Error::Model(format!("retained energy must be in (0, 1], got {energy}")));
        }
        let mut mean = vec![0.0; d];
        for i in 0..n {
            for (m, v) in mean.iter_mut().zip(train.row(i)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut xc = train.clone();
        for i in 0..n {
            for (v, m) in xc.row_mut(i).iter_mut().zip(&mean) {
                *v -= m;
            }
        }

        let gram = n < d;
        let (raw, vectors) = if gram {
            let mut g = xc.matmul(&xc.transpose());
            g.as_mut_slice().iter_mut().for_each(|v| *v /= n as f64);
            let eig = symmetric_eigen(&g)?.into_descending();
            (eig.values, eig.vectors)
        } else {
            let mut c = xc.transpose().matmul(&xc);
            c.as_mut_slice().iter_mut().for_each(|v| *v /= n as f64);
            let eig = symmetric_eigen(&c)?.into_descending();
            (eig.values, eig.vectors)
        };

        // numerically zero directions are never retained
        let lmax = raw.first().copied().unwrap_or(0.0).max(0.0);
        let eigenvalues: Vec<f64> = raw.into_iter().map(|l| if l <= 1e-12 * lmax { 0.0 } else { l }).collect();
        let rank = eigenvalues.iter().filter(|&&l| l > 0.0).count();
        let total: f64 = eigenvalues.iter().sum();
        if total <= 0.0 {
            log::warn!("PCA: training rows are all equal; projecting to a single zero component");
            return Ok(Self { mean, components: Matrix::zeros(d, 1), eigenvalues, retained: 1.0, degenerate: true });
        }
        let mut k = 0;
        let mut acc = 0.0;
        while k < rank {
            acc += eigenvalues[k];
            k += 1;
            if acc / total >= energy {
                break;
            }
        }
        let mut components = Matrix::zeros(d, k);
        if gram {
            // v_j = Xc^T u_j / sqrt(n * lambda_j), accumulated row by row of Xc
            let scaled: Vec<f64> = (0..n)
                .flat_map(|i| (0..k).map(move |j| (i, j)))
                .map(|(i, j)| vectors[(i, j)] / (n as f64 * eigenvalues[j]).sqrt())
                .collect();
            let out = components.as_mut_slice();
            for i in 0..n {
                let u = &scaled[i * k..(i + 1) * k];
                for (r, &x) in xc.row(i).iter().enumerate() {
                    if x == 0.0 {
                        continue;
                    }
                    for (o, w) in out[r * k..(r + 1) * k].iter_mut().zip(u) {
                        *o += x * w;
                    }
                }
            }
        } else {
            for r in 0..d {
                for j in 0..k {
                    components[(r, j)] = vectors[(r, j)];
                }
            }
        }
        Ok(Self { mean, components, eigenvalues, retained: acc / total, degenerate: false })
    }

    pub fn k(&self) -> usize {
        self.components.cols()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let k = self.k();
        let mut out = vec![0.0; k];
        let d = self.mean.len();
        for r in 0..d {
            let c = x[r] - self.mean[r];
            if c == 0.0 {
                continue;
            }
            let row = self.components.row(r);
            for j in 0..k {
                out[j] += c * row[j];
            }
        }
        out
    }

    pub fn apply_matrix(&self, m: &Matrix) -> Matrix {
        let rows: Vec<Vec<f64>> = (0..m.rows()).map(|i| self.apply(m.row(i))).collect();
        Matrix::from_vec(m.rows(), self.k(), rows.concat())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn points_on_a_line() {
        let rows: Vec<Vec<f64>> = (0..7)
            .map(|i| {
                let t = i as f64 - 2.0;
                vec![t, 2.0 * t, -t]
            })
            .collect();
        let p = Pca::fit(&Matrix::from_rows(&rows), DEFAULT_ENERGY).unwrap();
        assert_eq!(p.k(), 1);
        assert!((p.retained - 1.0).abs() < 1e-12);
    }

    #[test]
    fn isotropic_square_needs_both() {
        let rows = [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]];
        let p = Pca::fit(&Matrix::from_rows(&rows), DEFAULT_ENERGY).unwrap();
        assert_eq!(p.k(), 2);
    }

    #[test]
    fn nine_to_one_needs_two() {
        // principal variances 9 and 1
        let rows = [[3.0, 0.0], [-3.0, 0.0], [0.0, 1.0], [0.0, -1.0]];
        let p = Pca::fit(&Matrix::from_rows(&rows), DEFAULT_ENERGY).unwrap();
        assert!((p.eigenvalues[0] - 4.5).abs() < 1e-12 && (p.eigenvalues[1] - 0.5).abs() < 1e-12);
        assert_eq!(p.k(), 2);
        assert_eq!(Pca::fit(&Matrix::from_rows(&rows), 0.9).unwrap().k(), 1);
    }

    #[test]
    fn equal_rows_are_degenerate() {
        let p = Pca::fit(&Matrix::from_rows(&[[1.0, 2.0, 3.0]; 4]), DEFAULT_ENERGY).unwrap();
        assert!(p.degenerate);
        assert_eq!(p.k(), 1);
        assert_eq!(p.apply(&[9.0, 9.0, 9.0]), [0.0]);
        assert!(Pca::fit(&Matrix::from_rows(&[[1.0]]), DEFAULT_ENERGY).is_err());
    }

    #[test]
    fn gram_path_matches_covariance_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rows: Vec<Vec<f64>> = (0..6).map(|_| (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let wide = Pca::fit(&Matrix::from_rows(&rows), 1.0).unwrap();
        // same data padded with rows equal to the mean keeps the subspace
        // but switches to the covariance path (n >= d)
        let mut tall = rows.clone();
        let mean: Vec<f64> = (0..10).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / 6.0).collect();
        tall.extend(std::iter::repeat(mean).take(6));
        let t = Pca::fit(&Matrix::from_rows(&tall), 1.0).unwrap();
        for j in 0..wide.k().min(t.k()) {
            assert!((wide.eigenvalues[j] - 2.0 * t.eigenvalues[j]).abs() < 1e-10);
        }
        let x: Vec<f64> = (0..10).map(|i| i as f64 * 0.1).collect();
        let (a, b) = (wide.apply(&x), t.apply(&x));
        for j in 0..5 {
            assert!((a[j].abs() - b[j].abs()).abs() < 1e-9);
        }
    }
}
