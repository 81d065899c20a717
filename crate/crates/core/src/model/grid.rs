use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernel::KernelBasis;
use super::multiclass::{balanced_weights, present_classes, vote, OneVsOne, PairModel};
use super::svm::dual_value;
use super::{smo, DualSolution, Kernel, Normalizer, Pca, Scheme, SmoParams, SvmModel, DEFAULT_ENERGY};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Rows and class labels.
#[derive(Debug, Clone)]
pub struct LabeledSet {
    pub x: Matrix,
    pub y: Vec<usize>,
}

impl LabeledSet {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

/// `{10^-5, 10^-4.5, ..., 10^5}`.
pub fn exponent_grid() -> Vec<f64> {
    (0..21).map(|k| 10f64.powf(-5.0 + 0.5 * k as f64)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HyperGrid {
    pub schemes: Vec<Scheme>,
    pub linear: bool,
    pub rbf: bool,
    pub c_values: Vec<f64>,
    pub gammas: Vec<f64>,
}

impl HyperGrid {
    /// Both schemes, both kernels, 21 values each of `C` and `gamma`:
    /// 924 configurations.
    pub fn full() -> Self {
        Self {
            schemes: Scheme::ALL.to_vec(),
            linear: true,
            rbf: true,
            c_values: exponent_grid(),
            gammas: exponent_grid(),
        }
    }

    /// Configurations in tie-break order: scheme, then linear before RBF,
    /// then ascending `C`, then ascending `gamma`.
    pub fn configs(&self) -> Vec<Config> {
        let mut out = Vec::new();
        let mut cs = self.c_values.clone();
        cs.sort_by(f64::total_cmp);
        let mut gs = self.gammas.clone();
        gs.sort_by(f64::total_cmp);
        let mut schemes = self.schemes.clone();
        schemes.sort();
        schemes.dedup();
        for &scheme in &schemes {
            if self.linear {
                out.extend(cs.iter().map(|&c| Config { scheme, kernel: Kernel::Linear, c }));
            }
            if self.rbf {
                for &c in &cs {
                    out.extend(gs.iter().map(|&gamma| Config { scheme, kernel: Kernel::Rbf { gamma }, c }));
                }
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.configs().len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs().is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Config {
    pub scheme: Scheme,
    pub kernel: Kernel,
    pub c: f64,
}

/// Normalizer, then PCA, then a one-vs-one SVM.
#[derive(Debug, Clone, PartialEq)]
pub struct Pipeline {
    pub config: Config,
    pub normalizer: Normalizer,
    pub pca: Pca,
    pub classifier: OneVsOne,
}

impl Pipeline {
    pub fn fit(train: &LabeledSet, config: Config, params: &SmoParams) -> Result<Self> {
        let normalizer = Normalizer::fit(&train.x, config.scheme)?;
        let z = normalizer.apply_matrix(&train.x);
        let pca = Pca::fit(&z, DEFAULT_ENERGY)?;
        let p = pca.apply_matrix(&z);
        let classifier = OneVsOne::train(&p, &train.y, config.kernel, config.c, params)?;
        Ok(Self { config, normalizer, pca, classifier })
    }

    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        self.pca.apply(&self.normalizer.apply(x))
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        self.classifier.predict(&self.transform(x))
    }
}

#[derive(Debug, Clone)]
pub struct GridSearchResult {
    pub best: Config,
    pub best_score: f64,
    /// Validation score of every configuration, in `HyperGrid::configs` order.
    pub scores: Vec<f64>,
    pub pipeline: Pipeline,
}

/// Mean per-class recall over the classes that occur in `truth`.
pub(crate) fn recall_over_present(truth: &[usize], pred: &[usize]) -> f64 {
    let classes = present_classes(truth);
    let mut total = 0.0;
    for &c in &classes {
        let n = truth.iter().filter(|&&t| t == c).count();
        let hit = truth.iter().zip(pred).filter(|(&t, &p)| t == c && p == c).count();
        total += hit as f64 / n as f64;
    }
    total / classes.len() as f64
}

struct Prepared {
    scheme: Scheme,
    normalizer: Normalizer,
    pca: Pca,
    train_proj: Matrix,
    tt: KernelBasis,
    vt: KernelBasis,
}

struct PairData {
    positive: usize,
    negative: usize,
    idx: Vec<usize>,
    y: Vec<f64>,
    w: Vec<f64>,
}

struct ChainBest {
    order: usize,
    score: f64,
    solutions: Vec<DualSolution>,
}

/// Fits every configuration on `train` and scores it on `val` by macro
/// recall. The best score wins; ties go to the earliest configuration in
/// `HyperGrid::configs` order, so the result does not depend on thread
/// scheduling.
///
/// For each scheme and kernel the `C` values are visited in ascending
/// order, each solve starting from the previous solution. When that
/// solution has no coefficient at its bound it is already optimal for any
/// larger `C` and is reused as is; otherwise the solve starts from the
/// previous solution or from that solution scaled by the ratio of the `C`
/// values, whichever has the higher dual objective.
pub fn grid_search(
    train: &LabeledSet,
    val: &LabeledSet,
    grid: &HyperGrid,
    params: &SmoParams,
) -> Result<GridSearchResult> {
    if present_classes(&val.y).len() < 2 {
        return Err(Error::Model("validation set needs samples of at least two classes".into()));
    }
    search(train, val, grid, params)
}

pub(crate) fn search(
    train: &LabeledSet,
    val: &LabeledSet,
    grid: &HyperGrid,
    params: &SmoParams,
) -> Result<GridSearchResult> {
    if val.is_empty() {
        return Err(Error::Model("empty validation set".into()));
    }
    let classes = present_classes(&train.y);
    if classes.len() < 2 {
        return Err(Error::Model("training set has a single class".into()));
    }
    let configs = grid.configs();
    if configs.is_empty() {
        return Err(Error::Model("empty hyperparameter grid".into()));
    }

    let weights = balanced_weights(&train.y);
    let mut pairs = Vec::new();
    for (ia, &a) in classes.iter().enumerate() {
        for &b in &classes[ia + 1..] {
            let idx: Vec<usize> = (0..train.len()).filter(|&i| train.y[i] == a || train.y[i] == b).collect();
            let y = idx.iter().map(|&i| if train.y[i] == a { 1.0 } else { -1.0 }).collect();
            let w = idx.iter().map(|&i| weights[i]).collect();
            pairs.push(PairData { positive: a, negative: b, idx, y, w });
        }
    }

    let mut schemes: Vec<Scheme> = configs.iter().map(|c| c.scheme).collect();
    schemes.dedup();
    let prepared: Vec<Prepared> = schemes
        .par_iter()
        .map(|&scheme| {
            let normalizer = Normalizer::fit(&train.x, scheme)?;
            let z = normalizer.apply_matrix(&train.x);
            let pca = Pca::fit(&z, DEFAULT_ENERGY)?;
            let train_proj = pca.apply_matrix(&z);
            let val_proj = pca.apply_matrix(&normalizer.apply_matrix(&val.x));
            let tt = KernelBasis::new(&train_proj, &train_proj);
            let vt = KernelBasis::new(&val_proj, &train_proj);
            Ok(Prepared { scheme, normalizer, pca, train_proj, tt, vt })
        })
        .collect::<Result<_>>()?;

    // one chain per (scheme, kernel): config indices in ascending C
    let mut chains: Vec<(usize, Kernel, Vec<usize>)> = Vec::new();
    for (order, cfg) in configs.iter().enumerate() {
        let si = prepared.iter().position(|p| p.scheme == cfg.scheme).unwrap();
        match chains.iter_mut().find(|(s, k, _)| *s == si && *k == cfg.kernel) {
            Some(chain) => chain.2.push(order),
            None => chains.push((si, cfg.kernel, vec![order])),
        }
    }
    for chain in chains.iter_mut() {
        chain.2.sort_by(|&a, &b| configs[a].c.total_cmp(&configs[b].c).then(a.cmp(&b)));
    }

    let results: Vec<(Vec<(usize, f64)>, ChainBest)> = chains
        .par_iter()
        .map(|(si, kernel, orders)| run_chain(&prepared[*si], *kernel, orders, &configs, &pairs, &val.y, params))
        .collect::<Result<_>>()?;

    let mut scores = vec![f64::NAN; configs.len()];
    let mut best: Option<(usize, &ChainBest)> = None;
    for (ci, (chain_scores, chain_best)) in results.iter().enumerate() {
        for &(order, s) in chain_scores {
            scores[order] = s;
        }
        let better = match best {
            None => true,
            Some((_, b)) => chain_best.score > b.score || (chain_best.score == b.score && chain_best.order < b.order),
        };
        if better {
            best = Some((ci, chain_best));
        }
    }
    let (ci, chain_best) = best.expect("at least one chain");
    let prep = &prepared[chains[ci].0];
    let config = configs[chain_best.order];
    let models = pairs
        .iter()
        .zip(&chain_best.solutions)
        .map(|(p, sol)| {
            let rows: Vec<&[f64]> = p.idx.iter().map(|&i| prep.train_proj.row(i)).collect();
            PairModel {
                positive: p.positive,
                negative: p.negative,
                model: SvmModel::from_dual(config.kernel, &Matrix::from_rows(&rows), &p.y, sol),
            }
        })
        .collect();
    let pipeline = Pipeline {
        config,
        normalizer: prep.normalizer.clone(),
        pca: prep.pca.clone(),
        classifier: OneVsOne { classes: classes.clone(), models },
    };
    Ok(GridSearchResult { best: config, best_score: chain_best.score, scores, pipeline })
}

fn run_chain(
    prep: &Prepared,
    kernel: Kernel,
    orders: &[usize],
    configs: &[Config],
    pairs: &[PairData],
    val_y: &[usize],
    params: &SmoParams,
) -> Result<(Vec<(usize, f64)>, ChainBest)> {
    let ktt = prep.tt.kernel(kernel);
    let kvt = prep.vt.kernel(kernel);
    let subs: Vec<Matrix> = pairs
        .iter()
        .map(|p| {
            let m = p.idx.len();
            let mut g = Matrix::zeros(m, m);
            for (a, &i) in p.idx.iter().enumerate() {
                for (b, &j) in p.idx.iter().enumerate() {
                    g[(a, b)] = ktt[(i, j)];
                }
            }
            g
        })
        .collect();
    let classes: Vec<usize> = {
        let mut c: Vec<usize> = pairs.iter().flat_map(|p| [p.positive, p.negative]).collect();
        c.sort_unstable();
        c.dedup();
        c
    };

    let mut prev: Vec<Option<(DualSolution, f64)>> = vec![None; pairs.len()];
    let mut scores = Vec::with_capacity(orders.len());
    let mut best: Option<ChainBest> = None;
    for &order in orders {
        let c = configs[order].c;
        let mut sols = Vec::with_capacity(pairs.len());
        for (pi, p) in pairs.iter().enumerate() {
            let upper: Vec<f64> = p.w.iter().map(|w| c * w).collect();
            let sol = match &prev[pi] {
                Some((s, old_c)) => {
                    let old_upper: Vec<f64> = p.w.iter().map(|w| old_c * w).collect();
                    if s.converged && s.all_free(&old_upper) {
                        s.clone()
                    } else {
                        // the previous point as is, or scaled onto the new box
                        let scaled: Vec<f64> = s.alpha.iter().map(|a| a * (c / old_c)).collect();
                        let start = if dual_value(&subs[pi], &p.y, &scaled) > dual_value(&subs[pi], &p.y, &s.alpha) {
                            scaled
                        } else {
                            s.alpha.clone()
                        };
                        smo(&subs[pi], &p.y, &upper, params, Some(&start))?
                    }
                }
                None => smo(&subs[pi], &p.y, &upper, params, None)?,
            };
            prev[pi] = Some((sol.clone(), c));
            sols.push(sol);
        }
        let preds: Vec<usize> = (0..val_y.len())
            .map(|v| {
                let row = kvt.row(v);
                let decisions: Vec<(usize, usize, f64)> = pairs
                    .iter()
                    .zip(&sols)
                    .map(|(p, s)| {
                        let f: f64 = p
                            .idx
                            .iter()
                            .zip(&s.alpha)
                            .zip(&p.y)
                            .filter(|((_, &a), _)| a > 0.0)
                            .map(|((&i, &a), &y)| a * y * row[i])
                            .sum::<f64>()
                            + s.bias;
                        (p.positive, p.negative, f)
                    })
                    .collect();
                vote(&classes, &decisions)
            })
            .collect::<Result<_>>()?;
        let score = recall_over_present(val_y, &preds);
        scores.push((order, score));
        let better = match &best {
            None => true,
            Some(b) => score > b.score || (score == b.score && order < b.order),
        };
        if better {
            best = Some(ChainBest { order, score, solutions: sols });
        }
    }
    Ok((scores, best.expect("non-empty chain")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn grid_has_924_configs_in_tie_break_order() {
        let g = HyperGrid::full();
        let c = g.configs();
        assert_eq!(c.len(), 2 * 21 + 2 * 21 * 21);
        assert_eq!(c[0], Config { scheme: Scheme::MinMax, kernel: Kernel::Linear, c: 1e-5 });
        assert_eq!(c[21].kernel, Kernel::Rbf { gamma: 1e-5 });
        assert_eq!(c[22].kernel, Kernel::Rbf { gamma: 10f64.powf(-4.5) });
        assert_eq!(c[462].scheme, Scheme::ZScore);
        let e = exponent_grid();
        assert_eq!((e[0], e[10], e[20]), (1e-5, 1.0, 1e5));
    }

    fn blobs(n: usize, sep: f64, seed: u64) -> LabeledSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let c = i % 2;
            let shift = if c == 0 { -sep } else { sep };
            rows.push(vec![shift + rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]);
            y.push(c);
        }
        LabeledSet { x: Matrix::from_rows(&rows), y }
    }

    #[test]
    fn uninformative_val_picks_first_config() {
        let train = blobs(20, 2.0, 1);
        // a single-row-per-class val where every config predicts the same
        let mut val = blobs(2, 0.0, 2);
        val.x = Matrix::from_rows(&[[0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]);
        let r = grid_search(&train, &val, &HyperGrid::full(), &SmoParams::default()).unwrap();
        assert!(r.scores.iter().all(|&s| s == 0.5));
        assert_eq!(r.best, Config { scheme: Scheme::MinMax, kernel: Kernel::Linear, c: 1e-5 });
    }

    #[test]
    fn separable_val_prefers_linear() {
        let train = blobs(30, 3.0, 3);
        let val = blobs(10, 3.0, 4);
        let r = grid_search(&train, &val, &HyperGrid::full(), &SmoParams::default()).unwrap();
        assert_eq!(r.best_score, 1.0);
        assert_eq!(r.best.kernel, Kernel::Linear);
        for i in 0..val.len() {
            assert_eq!(r.pipeline.predict(val.x.row(i)).unwrap(), val.y[i]);
        }
    }

    #[test]
    fn warm_chain_matches_cold_fits() {
        let train = blobs(24, 0.6, 5);
        let val = blobs(12, 0.6, 6);
        let grid = HyperGrid {
            schemes: vec![Scheme::ZScore],
            linear: true,
            rbf: true,
            c_values: vec![0.1, 1.0, 10.0],
            gammas: vec![0.5],
        };
        let tight = SmoParams { tol: 1e-8, max_iter: Some(1_000_000), ..Default::default() };
        let r = grid_search(&train, &val, &grid, &tight).unwrap();
        for (cfg, &score) in grid.configs().iter().zip(&r.scores) {
            let p = Pipeline::fit(&train, *cfg, &tight).unwrap();
            let preds: Vec<usize> = (0..val.len()).map(|i| p.predict(val.x.row(i)).unwrap()).collect();
            assert_eq!(recall_over_present(&val.y, &preds), score, "{cfg:?}");
        }
    }

    #[test]
    fn degenerate_sets_rejected() {
        let train = blobs(10, 1.0, 7);
        let mut one = blobs(4, 1.0, 8);
        one.y = vec![0; 4];
        assert!(grid_search(&train, &one, &HyperGrid::full(), &SmoParams::default()).is_err());
        let empty = LabeledSet { x: Matrix::zeros(0, 3), y: vec![] };
        assert!(grid_search(&train, &empty, &HyperGrid::full(), &SmoParams::default()).is_err());
    }
}
