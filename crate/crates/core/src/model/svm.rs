use serde::Serialize;

use super::Kernel;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub const DEFAULT_TOL: f64 = 1e-3;
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoParams {
    pub tol: f64,
    /// Cap on pair updates; `None` means `10 * n`.
    pub max_iter: Option<usize>,
    /// Record the dual objective after every iteration.
    pub trace: bool,
}

impl Default for SmoParams {
    fn default() -> Self {
        Self { tol: DEFAULT_TOL, max_iter: None, trace: false }
    }
}

/// A solution of the soft-margin dual
/// `max sum(a) - 1/2 a^T Q a` with `Q_ij = y_i y_j K_ij`,
/// `0 <= a_i <= C_i`, `sum(a_i y_i) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Final maximal KKT violation `m(a) - M(a)`.
    pub violation: f64,
    pub objective: f64,
    pub trace: Vec<f64>,
}

impl DualSolution {
    /// No coefficient sits at its upper bound.
    pub fn all_free(&self, upper: &[f64]) -> bool {
        self.alpha.iter().zip(upper).all(|(&a, &c)| a < c)
    }
}

/// SMO in the libsvm style: the first index is the maximal KKT violator,
/// the second maximizes the second-order gain among violating partners.
/// Stops when the maximal violation is at most `tol`.
///
/// `kernel` is the `n x n` Gram matrix, `y` holds `+1`/`-1`, `upper` the
/// per-sample box bounds. `warm` may supply a feasible starting point.
pub fn smo(
    kernel: &Matrix,
    y: &[f64],
    upper: &[f64],
    params: &SmoParams,
    warm: Option<&[f64]>,
) -> Result<DualSolution> {
    let n = y.len();
    if kernel.rows() != n || kernel.cols() != n || upper.len() != n {
        return Err(Error::Model("SMO shape mismatch".into()));
    }
    if !y.contains(&1.0) || !y.contains(&-1.0) {
        return Err(Error::Model("SVM training needs both classes".into()));
    }
    let mut qm = vec![0.0; n * n];
    for i in 0..n {
        for (j, v) in qm[i * n..(i + 1) * n].iter_mut().enumerate() {
            *v = y[i] * y[j] * kernel[(i, j)];
        }
    }
    let qrow = |i: usize| &qm[i * n..(i + 1) * n];
    let mut alpha = match warm {
        Some(a) => {
            let mut a = a.to_vec();
            for (ai, &c) in a.iter_mut().zip(upper) {
                *ai = ai.clamp(0.0, c);
            }
            a
        }
        None => vec![0.0; n],
    };
    let mut grad = vec![-1.0; n];
    for j in 0..n {
        if alpha[j] != 0.0 {
            for (g, &qv) in grad.iter_mut().zip(qrow(j)) {
                *g += qv * alpha[j];
            }
        }
    }
    let dual = |alpha: &[f64], grad: &[f64]| -> f64 {
        // -f(a) with f = 1/2 a^T (G - e)
        -0.5 * alpha.iter().zip(grad).map(|(a, g)| a * (g - 1.0)).sum::<f64>()
    };
    let max_iter = params.max_iter.unwrap_or(10 * n);
    let mut trace = Vec::new();
    if params.trace {
        trace.push(dual(&alpha, &grad));
    }
    let mut iterations = 0;
    let mut violation;
    let mut converged = false;
    let in_up = |t: usize, alpha: &[f64]| if y[t] > 0.0 { alpha[t] < upper[t] } else { alpha[t] > 0.0 };
    let in_low = |t: usize, alpha: &[f64]| if y[t] > 0.0 { alpha[t] > 0.0 } else { alpha[t] < upper[t] };
    loop {
        // i: maximal violator; j: best second-order gain among violators
        let mut i = usize::MAX;
        let mut gmax = f64::NEG_INFINITY;
        let mut gmin = f64::INFINITY;
        for t in 0..n {
            let v = -y[t] * grad[t];
            if in_up(t, &alpha) && v > gmax {
                gmax = v;
                i = t;
            }
            if in_low(t, &alpha) && v < gmin {
                gmin = v;
            }
        }
        violation = if i == usize::MAX || gmin == f64::INFINITY { 0.0 } else { gmax - gmin };
        if violation <= params.tol {
            converged = true;
            break;
        }
        if iterations >= max_iter {
            break;
        }
        let kii = kernel[(i, i)];
        let ki = kernel.row(i);
        let mut j = usize::MAX;
        let mut best_gain = f64::INFINITY;
        for t in 0..n {
            if !in_low(t, &alpha) {
                continue;
            }
            let b = gmax + y[t] * grad[t];
            if b > 0.0 {
                let mut a = kii + kernel[(t, t)] - 2.0 * ki[t];
                if a <= 0.0 {
                    a = TAU;
                }
                let gain = -(b * b) / a;
                if gain < best_gain {
                    best_gain = gain;
                    j = t;
                }
            }
        }
        iterations += 1;

        let (qi, qj) = (qrow(i), qrow(j));
        let (ci, cj) = (upper[i], upper[j]);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let mut quad = qi[i] + qj[j] + 2.0 * qi[j];
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > ci - cj {
                if alpha[i] > ci {
                    alpha[i] = ci;
                    alpha[j] = ci - diff;
                }
            } else if alpha[j] > cj {
                alpha[j] = cj;
                alpha[i] = cj + diff;
            }
        } else {
            let mut quad = qi[i] + qj[j] - 2.0 * qi[j];
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > ci {
                if alpha[i] > ci {
                    alpha[i] = ci;
                    alpha[j] = sum - ci;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > cj {
                if alpha[j] > cj {
                    alpha[j] = cj;
                    alpha[i] = sum - cj;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for ((g, &a), &b) in grad.iter_mut().zip(qi).zip(qj) {
            *g += a * di + b * dj;
        }
        if params.trace {
            trace.push(dual(&alpha, &grad));
        }
    }

    let bias = -rho(&alpha, &grad, y, upper);
    let objective = dual(&alpha, &grad);
    Ok(DualSolution { alpha, bias, iterations, converged, violation, objective, trace })
}

// Average of y_i G_i over free coefficients, else the midpoint of the
// feasible interval.
fn rho(alpha: &[f64], grad: &[f64], y: &[f64], upper: &[f64]) -> f64 {
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut sum = 0.0;
    let mut free = 0usize;
    for t in 0..y.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= upper[t] {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum += yg;
        }
    }
    if free > 0 {
        sum / free as f64
    } else {
        (ub + lb) / 2.0
    }
}

/// Dual objective `sum(a) - 1/2 a^T Q a`.
pub(crate) fn dual_value(kernel: &Matrix, y: &[f64], alpha: &[f64]) -> f64 {
    let mut quad = 0.0;
    for i in 0..y.len() {
        if alpha[i] == 0.0 {
            continue;
        }
        let row = kernel.row(i);
        let s: f64 = (0..y.len()).filter(|&j| alpha[j] != 0.0).map(|j| alpha[j] * y[j] * row[j]).sum();
        quad += alpha[i] * y[i] * s;
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

/// A trained binary classifier: `f(x) = sum_i coef_i K(sv_i, x) + bias`
/// with `coef_i = alpha_i y_i`; positive values predict the `+1` class.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub kernel: Kernel,
    pub support: Vec<Vec<f64>>,
    pub coef: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl SvmModel {
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.support.iter().zip(&self.coef).map(|(s, c)| c * self.kernel.eval(s, x)).sum::<f64>() + self.bias
    }

    pub(crate) fn from_dual(kernel: Kernel, x: &Matrix, y: &[f64], sol: &DualSolution) -> Self {
        let mut support = Vec::new();
        let mut coef = Vec::new();
        for i in 0..y.len() {
            if sol.alpha[i] > 0.0 {
                support.push(x.row(i).to_vec());
                coef.push(sol.alpha[i] * y[i]);
            }
        }
        SvmModel { kernel, support, coef, bias: sol.bias, iterations: sol.iterations, converged: sol.converged }
    }
}

/// Weighted soft-margin SVM with per-sample bound `C * w_i`.
pub fn train_svm(
    x: &Matrix,
    y: &[f64],
    weights: &[f64],
    kernel: Kernel,
    c: f64,
    params: &SmoParams,
) -> Result<SvmModel> {
    if x.rows() != y.len() || y.len() != weights.len() {
        return Err(Error::Model("train_svm: rows, labels and weights differ in length".into()));
    }
    if let Some(v) = y.iter().find(|&&v| v != 1.0 && v != -1.0) {
        return Err(Error::Model(format!("labels must be +1 or -1, got {v}")));
    }
    if !(c > 0.0) || weights.iter().any(|&w| !(w > 0.0)) {
        return Err(Error::Model("C and sample weights must be positive".into()));
    }
    let upper: Vec<f64> = weights.iter().map(|w| c * w).collect();
    let gram = kernel.matrix(x, x);
    let sol = smo(&gram, y, &upper, params, None)?;
    Ok(SvmModel::from_dual(kernel, x, y, &sol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_points_split_at_origin() {
        let x = Matrix::from_rows(&[[-1.0], [1.0]]);
        let m = train_svm(&x, &[-1.0, 1.0], &[1.0, 1.0], Kernel::Linear, 1e3, &SmoParams::default()).unwrap();
        assert!(m.decision(&[0.0]).abs() < 1e-9);
        assert!((m.decision(&[1.0]) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn xor_with_rbf() {
        let x = Matrix::from_rows(&[[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]]);
        let y = [1.0, 1.0, -1.0, -1.0];
        let m = train_svm(&x, &y, &[1.0; 4], Kernel::Rbf { gamma: 1.0 }, 10.0, &SmoParams::default()).unwrap();
        for i in 0..4 {
            assert_eq!(m.decision(x.row(i)).signum(), y[i]);
        }
    }

    #[test]
    fn single_class_rejected() {
        let x = Matrix::from_rows(&[[0.0], [1.0]]);
        assert!(train_svm(&x, &[1.0, 1.0], &[1.0, 1.0], Kernel::Linear, 1.0, &SmoParams::default()).is_err());
    }

    #[test]
    fn feasibility_and_monotone_objective() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for trial in 0..10 {
            let n = 30;
            let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
            let y: Vec<f64> = rows
                .iter()
                .map(|r| if r[0] + 0.3 * r[1] + rng.gen_range(-0.4..0.4) > 0.0 { 1.0 } else { -1.0 })
                .collect();
            let upper: Vec<f64> = (0..n).map(|i| if i % 3 == 0 { 2.0 } else { 1.0 }).collect();
            let kernel = if trial % 2 == 0 { Kernel::Linear } else { Kernel::Rbf { gamma: 0.7 } };
            let x = Matrix::from_rows(&rows);
            let gram = kernel.matrix(&x, &x);
            let sol = smo(&gram, &y, &upper, &SmoParams { trace: true, ..Default::default() }, None).unwrap();
            assert!(sol.converged);
            assert!(sol.violation <= DEFAULT_TOL);
            let balance: f64 = sol.alpha.iter().zip(&y).map(|(a, y)| a * y).sum();
            assert!(balance.abs() <= 1e-6);
            assert!(sol.alpha.iter().zip(&upper).all(|(&a, &c)| (0.0..=c).contains(&a)));
            for w in sol.trace.windows(2) {
                assert!(w[1] >= w[0] - 1e-12, "objective decreased: {} -> {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn warm_start_reaches_same_optimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rows: Vec<Vec<f64>> = (0..25).map(|_| (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let y: Vec<f64> = rows.iter().map(|r| if r[0] > r[1] { 1.0 } else { -1.0 }).collect();
        let gram = Kernel::Rbf { gamma: 2.0 }.matrix(&Matrix::from_rows(&rows), &Matrix::from_rows(&rows));
        let tight = SmoParams { tol: 1e-9, ..Default::default() };
        let small = smo(&gram, &y, &vec![0.5; 25], &tight, None).unwrap();
        let cold = smo(&gram, &y, &vec![5.0; 25], &tight, None).unwrap();
        let warm = smo(&gram, &y, &vec![5.0; 25], &tight, Some(&small.alpha)).unwrap();
        assert!((cold.objective - warm.objective).abs() < 1e-8);
    }
}
