use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{solve, Matrix};
use crate::stats::{binomial_half_cdf, chi2_sf};

/// Below this many discordant pairs McNemar uses the exact binomial test.
pub const MCNEMAR_EXACT_BELOW: u64 = 25;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McNemar {
    pub b: u64,
    pub c: u64,
    /// `min(b, c)` for the exact test, the corrected chi-squared otherwise.
    pub statistic: f64,
    pub p: f64,
    pub exact: bool,
    pub note: Option<String>,
}

/// McNemar's test on discordant counts: `b` pairs where only the system
/// is right, `c` where only the baseline is.
pub fn mcnemar(b: u64, c: u64) -> Result<McNemar> {
    let n = b + c;
    if n == 0 {
        return Ok(McNemar { b, c, statistic: 0.0, p: 1.0, exact: true, note: Some("no discordant pairs".into()) });
    }
    if n < MCNEMAR_EXACT_BELOW {
        let k = b.min(c);
        let p = (2.0 * binomial_half_cdf(k, n)?).min(1.0);
        return Ok(McNemar { b, c, statistic: k as f64, p, exact: true, note: None });
    }
    let diff = (b as f64 - c as f64).abs() - 1.0;
    let statistic = diff * diff / n as f64;
    Ok(McNemar { b, c, statistic, p: chi2_sf(statistic, 1.0), exact: false, note: None })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StuartMaxwell {
    pub statistic: f64,
    pub df: usize,
    pub p: f64,
    /// Categories with an empty row and column, left out of the test.
    pub dropped: Vec<usize>,
}

// exact determinant of a small integer matrix (Bareiss)
fn det_exact(m: &[Vec<i128>]) -> i128 {
    let n = m.len();
    if n == 0 {
        return 1;
    }
    let mut a = m.to_vec();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if a[k][k] == 0 {
            match (k + 1..n).find(|&r| a[r][k] != 0) {
                Some(r) => {
                    a.swap(k, r);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
        }
        prev = a[k][k];
    }
    sign * a[n - 1][n - 1]
}

/// Stuart-Maxwell test of marginal homogeneity for a square table with
/// `table[a][b]` = number of samples the system puts in `a` and the
/// baseline in `b`.
///
/// The statistic uses the first `K - 1` of the categories kept after
/// dropping those with empty margins; `df` is one less than the number
/// kept. Equal margins give statistic 0 and `p = 1`.
pub fn stuart_maxwell(table: &[Vec<u64>]) -> Result<StuartMaxwell> {
    let k = table.len();
    if k < 2 || table.iter().any(|r| r.len() != k) {
        return Err(Error::Stats("Stuart-Maxwell needs a square table with at least 2 categories".into()));
    }
    let row: Vec<i128> = table.iter().map(|r| r.iter().map(|&v| v as i128).sum()).collect();
    let col: Vec<i128> = (0..k).map(|j| table.iter().map(|r| r[j] as i128).sum()).collect();
    let kept: Vec<usize> = (0..k).filter(|&i| row[i] + col[i] > 0).collect();
    let dropped: Vec<usize> = (0..k).filter(|&i| row[i] + col[i] == 0).collect();
    let df = kept.len().saturating_sub(1);
    if kept.iter().all(|&i| row[i] == col[i]) {
        return Ok(StuartMaxwell { statistic: 0.0, df, p: 1.0, dropped });
    }
    let idx = &kept[..df];
    let t = |a: usize, b: usize| table[a][b] as i128;
    let s: Vec<Vec<i128>> = idx
        .iter()
        .map(|&a| {
            idx.iter().map(|&b| if a == b { row[a] + col[a] - 2 * t(a, a) } else { -(t(a, b) + t(b, a)) }).collect()
        })
        .collect();
    if det_exact(&s) == 0 {
        return Err(Error::Stats("degenerate table".into()));
    }
    let d: Vec<f64> = idx.iter().map(|&i| (row[i] - col[i]) as f64).collect();
    let sm = Matrix::from_rows(&s.iter().map(|r| r.iter().map(|&v| v as f64).collect::<Vec<_>>()).collect::<Vec<_>>());
    let x = solve(&sm, &d).ok_or_else(|| Error::Stats("degenerate table".into()))?;
    let statistic: f64 = d.iter().zip(&x).map(|(a, b)| a * b).sum();
    Ok(StuartMaxwell { statistic, df, p: chi2_sf(statistic, df as f64), dropped })
}

/// Uniform i.i.d. class draws, one per true label.
pub fn chance_baseline(truth: &[usize], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::Evaluation(format!("chance baseline needs at least 2 classes, got {k}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(truth.iter().map(|_| rng.gen_range(0..k)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::macro_recall;

    #[test]
    fn mcnemar_cases() {
        assert_eq!(mcnemar(5, 5).unwrap().p, 1.0);
        let m = mcnemar(1, 9).unwrap();
        assert!(m.exact);
        assert!((m.p - 22.0 / 1024.0).abs() < 1e-12);
        let m = mcnemar(40, 20).unwrap();
        assert!(!m.exact);
        assert!((m.statistic - 361.0 / 60.0).abs() < 1e-12);
        // chi2_1 upper tail via erfc
        let oracle = statrs::function::erf::erfc((m.statistic / 2.0).sqrt());
        assert!((m.p - oracle).abs() < 1e-12);
        assert!((m.p - 0.0142).abs() < 5e-4);
        let z = mcnemar(0, 0).unwrap();
        assert_eq!((z.p, z.statistic), (1.0, 0.0));
        assert_eq!(z.note.as_deref(), Some("no discordant pairs"));
    }

    fn t(rows: &[[u64; 3]]) -> Vec<Vec<u64>> {
        rows.iter().map(|r| r.to_vec()).collect()
    }

    #[test]
    fn stuart_maxwell_hand_case() {
        // margins: rows (15, 16, 15), cols (16, 16, 14), so d = (-1, 0, 1)
        // S over the first two categories: [[11, -7], [-7, 12]], det 83,
        // d' S^-1 d = 12 / 83
        let r = stuart_maxwell(&t(&[[10, 2, 3], [5, 10, 1], [1, 4, 10]])).unwrap();
        assert!((r.statistic - 12.0 / 83.0).abs() < 1e-12);
        assert_eq!(r.df, 2);
        assert!((r.p - (-6.0 / 83.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn stuart_maxwell_diagonal() {
        let r = stuart_maxwell(&t(&[[5, 0, 0], [0, 3, 0], [0, 0, 9]])).unwrap();
        assert_eq!((r.statistic, r.p), (0.0, 1.0));
        let base = t(&[[10, 2, 3], [5, 10, 1], [1, 4, 10]]);
        let s0 = stuart_maxwell(&base).unwrap().statistic;
        for i in 0..3 {
            let mut m = base.clone();
            m[i][i] += 7;
            assert_eq!(stuart_maxwell(&m).unwrap().statistic, s0);
        }
    }

    #[test]
    fn stuart_maxwell_drops_empty_category() {
        let r = stuart_maxwell(&t(&[[0, 3, 0], [1, 0, 0], [0, 0, 0]])).unwrap();
        assert_eq!(r.dropped, [2]);
        assert_eq!(r.df, 1);
        // d = 2, S = 4
        assert!((r.statistic - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chance_is_seeded_and_fair() {
        let truth: Vec<usize> = (0..30_000).map(|i| i % 3).collect();
        let a = chance_baseline(&truth, 3, 4).unwrap();
        assert_eq!(a, chance_baseline(&truth, 3, 4).unwrap());
        let pairs: Vec<(usize, usize)> = truth.iter().copied().zip(a).collect();
        assert!((macro_recall(&pairs, 3).unwrap() - 1.0 / 3.0).abs() < 0.015);
        let truth2: Vec<usize> = (0..30_000).map(|i| i % 2).collect();
        let b = chance_baseline(&truth2, 2, 4).unwrap();
        let pairs: Vec<(usize, usize)> = truth2.iter().copied().zip(b).collect();
        assert!((macro_recall(&pairs, 2).unwrap() - 0.5).abs() < 0.015);
        assert!(chance_baseline(&truth, 1, 0).is_err());
    }
}
