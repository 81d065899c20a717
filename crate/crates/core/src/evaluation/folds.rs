use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::seed::sub_seed;

pub const VAL_FRACTION: f64 = 0.2;

/// A couple with the class labels of all its speaker-sessions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoupleLabels {
    pub couple_id: String,
    pub labels: Vec<usize>,
}

/// Groups `(couple_id, class)` pairs by couple.
pub fn couple_labels<'a>(rows: impl IntoIterator<Item = (&'a str, usize)>) -> Vec<CoupleLabels> {
    let mut map: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (c, l) in rows {
        map.entry(c).or_default().push(l);
    }
    map.into_iter().map(|(couple_id, labels)| CoupleLabels { couple_id: couple_id.to_string(), labels }).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Fold {
    pub test: String,
    pub train: Vec<String>,
    pub val: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FoldPlan {
    /// One fold per couple, in couple id order.
    pub folds: Vec<Fold>,
}

impl FoldPlan {
    pub fn len(&self) -> usize {
        self.folds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.folds.is_empty()
    }
}

fn histogram(couples: &[&CoupleLabels], classes: usize) -> Vec<u64> {
    let mut h = vec![0u64; classes];
    for c in couples {
        for &l in &c.labels {
            h[l] += 1;
        }
    }
    h
}

fn l1_proportions(a: &[u64], b: &[u64]) -> f64 {
    let (na, nb) = (a.iter().sum::<u64>().max(1) as f64, b.iter().sum::<u64>().max(1) as f64);
    a.iter().zip(b).map(|(&x, &y)| (x as f64 / na - y as f64 / nb).abs()).sum()
}

/// Leave-one-couple-out folds. In each fold the remaining couples are
/// split so that `ceil(0.2 * m)` of the `m` of them form the validation
/// set, chosen greedily to keep the train and validation label
/// proportions close (L1 distance). Candidates are visited in a seeded
/// shuffled order and the first best candidate wins.
pub fn plan_folds(couples: &[CoupleLabels], seed: u64) -> Result<FoldPlan> {
    if couples.len() < 3 {
        return Err(Error::Evaluation(format!("leave-one-couple-out needs at least 3 couples, got {}", couples.len())));
    }
    let mut sorted: Vec<&CoupleLabels> = couples.iter().collect();
    sorted.sort_by(|a, b| a.couple_id.cmp(&b.couple_id));
    if sorted.windows(2).any(|w| w[0].couple_id == w[1].couple_id) {
        return Err(Error::Evaluation("duplicate couple id in fold planning".into()));
    }
    let classes = sorted.iter().flat_map(|c| c.labels.iter().copied()).max().map_or(1, |m| m + 1);

    let folds = sorted
        .iter()
        .map(|test| {
            let mut rest: Vec<&CoupleLabels> =
                sorted.iter().copied().filter(|c| c.couple_id != test.couple_id).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, &format!("fold/{}", test.couple_id)));
            rest.shuffle(&mut rng);
            let n_val = (VAL_FRACTION * rest.len() as f64).ceil() as usize;
            let mut val: Vec<&CoupleLabels> = Vec::with_capacity(n_val);
            while val.len() < n_val {
                let mut best: Option<(usize, f64)> = None;
                for (idx, cand) in rest.iter().enumerate() {
                    let mut v = val.clone();
                    v.push(cand);
                    let train: Vec<&CoupleLabels> =
                        rest.iter().enumerate().filter(|&(i, _)| i != idx).map(|(_, c)| *c).collect();
                    let d = l1_proportions(&histogram(&train, classes), &histogram(&v, classes));
                    if best.map_or(true, |(_, b)| d < b) {
                        best = Some((idx, d));
                    }
                }
                let (idx, _) = best.expect("candidates remain");
                val.push(rest.remove(idx));
            }
            let mut train: Vec<String> = rest.iter().map(|c| c.couple_id.clone()).collect();
            let mut val: Vec<String> = val.iter().map(|c| c.couple_id.clone()).collect();
            train.sort();
            val.sort();
            Fold { test: test.couple_id.clone(), train, val }
        })
        .collect();
    Ok(FoldPlan { folds })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn couples(n: usize) -> Vec<CoupleLabels> {
        (0..n).map(|i| CoupleLabels { couple_id: format!("c{i:02}"), labels: vec![i % 3, (i / 3) % 3] }).collect()
    }

    #[test]
    fn one_fold_per_couple_and_disjoint() {
        let plan = plan_folds(&couples(62), 7).unwrap();
        assert_eq!(plan.len(), 62);
        for f in &plan.folds {
            assert!(!f.train.contains(&f.test) && !f.val.contains(&f.test));
            assert!(f.train.iter().all(|c| !f.val.contains(c)));
            assert_eq!(f.train.len() + f.val.len(), 61);
            assert_eq!(f.val.len(), 13);
        }
    }

    #[test]
    fn five_couples_give_one_val_couple() {
        let plan = plan_folds(&couples(5), 1).unwrap();
        assert!(plan.folds.iter().all(|f| f.val.len() == 1 && f.train.len() == 3));
    }

    #[test]
    fn too_few_couples() {
        assert!(plan_folds(&couples(2), 1).is_err());
    }

    #[test]
    fn deterministic_and_seed_dependent() {
        let a = plan_folds(&couples(30), 3).unwrap();
        assert_eq!(a, plan_folds(&couples(30), 3).unwrap());
        let mut reversed = couples(30);
        reversed.reverse();
        assert_eq!(a, plan_folds(&reversed, 3).unwrap());
    }

    #[test]
    fn stratification_tracks_proportions() {
        // 40 couples: a quarter of them carry class 2
        let cs: Vec<CoupleLabels> = (0..40)
            .map(|i| CoupleLabels {
                couple_id: format!("c{i:02}"),
                labels: vec![if i % 4 == 0 { 2 } else { i % 2 }; 2],
            })
            .collect();
        let plan = plan_folds(&cs, 5).unwrap();
        let by_id: BTreeMap<&str, &CoupleLabels> = cs.iter().map(|c| (c.couple_id.as_str(), c)).collect();
        for f in &plan.folds {
            let t: Vec<&CoupleLabels> = f.train.iter().map(|c| by_id[c.as_str()]).collect();
            let v: Vec<&CoupleLabels> = f.val.iter().map(|c| by_id[c.as_str()]).collect();
            assert!(l1_proportions(&histogram(&t, 3), &histogram(&v, 3)) < 0.15);
        }
    }
}
