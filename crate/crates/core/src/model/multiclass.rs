use super::{train_svm, Kernel, SmoParams, SvmModel};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// `w_c = N / (K * N_c)` for each sample's class `c`, with `K` the number
/// of classes present. Every class then carries the same total weight.
pub fn balanced_weights(y: &[usize]) -> Vec<f64> {
    let classes = present_classes(y);
    let n = y.len() as f64;
    let k = classes.len() as f64;
    let count = |c: usize| y.iter().filter(|&&v| v == c).count() as f64;
    let w: Vec<(usize, f64)> = classes.iter().map(|&c| (c, n / (k * count(c)))).collect();
    y.iter().map(|v| w.iter().find(|(c, _)| c == v).unwrap().1).collect()
}

pub fn present_classes(y: &[usize]) -> Vec<usize> {
    let mut c = y.to_vec();
    c.sort_unstable();
    c.dedup();
    c
}

/// Binary model separating `positive` (decision > 0) from `negative`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairModel {
    pub positive: usize,
    pub negative: usize,
    pub model: SvmModel,
}

/// One model per pair of classes, pairs in lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct OneVsOne {
    pub classes: Vec<usize>,
    pub models: Vec<PairModel>,
}

impl OneVsOne {
    pub fn train(x: &Matrix, y: &[usize], kernel: Kernel, c: f64, params: &SmoParams) -> Result<Self> {
        let classes = present_classes(y);
        if classes.len() < 2 {
            return Err(Error::Model("one-vs-one training needs at least two classes".into()));
        }
        let w = balanced_weights(y);
        let mut models = Vec::new();
        for (ia, &a) in classes.iter().enumerate() {
            for &b in &classes[ia + 1..] {
                let idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == a || y[i] == b).collect();
                let rows: Vec<&[f64]> = idx.iter().map(|&i| x.row(i)).collect();
                let sub = Matrix::from_rows(&rows);
                let ys: Vec<f64> = idx.iter().map(|&i| if y[i] == a { 1.0 } else { -1.0 }).collect();
                let ws: Vec<f64> = idx.iter().map(|&i| w[i]).collect();
                let model = train_svm(&sub, &ys, &ws, kernel, c, params)?;
                models.push(PairModel { positive: a, negative: b, model });
            }
        }
        Ok(Self { classes, models })
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        predict_multiclass(self, x)
    }
}

/// Majority vote over all pairwise models.
pub fn predict_multiclass(ovo: &OneVsOne, x: &[f64]) -> Result<usize> {
    let decisions: Vec<(usize, usize, f64)> =
        ovo.models.iter().map(|m| (m.positive, m.negative, m.model.decision(x))).collect();
    vote(&ovo.classes, &decisions)
}

/// Tallies `(positive, negative, decision)` triples. Ties go to the class
/// with the larger sum of `|decision|` over the models it won, then to the
/// lower class index.
pub fn vote(classes: &[usize], decisions: &[(usize, usize, f64)]) -> Result<usize> {
    for (ia, &a) in classes.iter().enumerate() {
        for &b in &classes[ia + 1..] {
            if !decisions.iter().any(|&(p, q, _)| (p, q) == (a, b) || (p, q) == (b, a)) {
                return Err(Error::Model(format!("missing pairwise model for classes {a} and {b}")));
            }
        }
    }
    let mut votes = vec![0usize; classes.len()];
    let mut margin = vec![0.0f64; classes.len()];
    let pos = |c: usize| classes.iter().position(|&k| k == c);
    for &(p, q, f) in decisions {
        let winner = if f > 0.0 { p } else { q };
        let w = pos(winner).ok_or_else(|| Error::Model(format!("decision for unknown class {winner}")))?;
        votes[w] += 1;
        margin[w] += f.abs();
    }
    let mut best = 0;
    for k in 1..classes.len() {
        if votes[k] > votes[best] || (votes[k] == votes[best] && margin[k] > margin[best]) {
            best = k;
        }
    }
    Ok(classes[best])
}
