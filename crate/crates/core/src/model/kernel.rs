use std::fmt;

use serde::{Deserialize, Serialize};

use crate::linalg::{dot, squared_distance, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Kernel {
    Linear,
    Rbf { gamma: f64 },
}

impl Kernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => dot(a, b),
            Kernel::Rbf { gamma } => (-gamma * squared_distance(a, b)).exp(),
        }
    }

    /// `K[i][j] = k(a_i, b_j)`.
    pub fn matrix(&self, a: &Matrix, b: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(a.rows(), b.rows());
        for i in 0..a.rows() {
            for j in 0..b.rows() {
                out[(i, j)] = self.eval(a.row(i), b.row(j));
            }
        }
        out
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kernel::Linear => f.write_str("linear"),
            Kernel::Rbf { gamma } => write!(f, "rbf(gamma={gamma:e})"),
        }
    }
}

/// Pairwise inner products and squared distances between two row sets,
/// from which any grid kernel is a cheap elementwise map.
#[derive(Debug, Clone)]
pub(crate) struct KernelBasis {
    pub dots: Matrix,
    pub sq_dists: Matrix,
}

impl KernelBasis {
    pub fn new(a: &Matrix, b: &Matrix) -> Self {
        let dots = a.matmul(&b.transpose());
        let na: Vec<f64> = (0..a.rows()).map(|i| dot(a.row(i), a.row(i))).collect();
        let nb: Vec<f64> = (0..b.rows()).map(|j| dot(b.row(j), b.row(j))).collect();
        let mut sq_dists = Matrix::zeros(a.rows(), b.rows());
        for i in 0..a.rows() {
            for j in 0..b.rows() {
                sq_dists[(i, j)] = (na[i] + nb[j] - 2.0 * dots[(i, j)]).max(0.0);
            }
        }
        Self { dots, sq_dists }
    }

    pub fn kernel(&self, kernel: Kernel) -> Matrix {
        match kernel {
            Kernel::Linear => self.dots.clone(),
            Kernel::Rbf { gamma } => {
                let mut m = self.sq_dists.clone();
                m.as_mut_slice().iter_mut().for_each(|d| *d = (-gamma * *d).exp());
                m
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_matches_direct() {
        let a = Matrix::from_rows(&[[1.0, 2.0], [0.5, -1.0], [3.0, 0.0]]);
        let b = Matrix::from_rows(&[[0.0, 1.0], [2.0, 2.0]]);
        let basis = KernelBasis::new(&a, &b);
        for k in [Kernel::Linear, Kernel::Rbf { gamma: 0.3 }] {
            let direct = k.matrix(&a, &b);
            let fast = basis.kernel(k);
            for (x, y) in direct.as_slice().iter().zip(fast.as_slice()) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
