use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Scheme {
    MinMax,
    ZScore,
}

impl Scheme {
    pub const ALL: [Scheme; 2] = [Scheme::MinMax, Scheme::ZScore];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::MinMax => "min-max",
            Scheme::ZScore => "z-score",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "min-max" | "minmax" | "MinMax" => Ok(Scheme::MinMax),
            "z-score" | "zscore" | "ZScore" => Ok(Scheme::ZScore),
            other => Err(format!("unknown normalization scheme `{other}`")),
        }
    }
}

/// Per-column affine map `(x - offset) / spread`; columns with zero spread
/// map to 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    pub scheme: Scheme,
    pub offset: Vec<f64>,
    pub spread: Vec<f64>,
}

impl Normalizer {
    pub fn fit(train: &Matrix, scheme: Scheme) -> Result<Self> {
        let (n, d) = (train.rows(), train.cols());
        if n == 0 {
            return Err(Error::Model("cannot fit a normalizer on an empty training set".into()));
        }
        let mut offset = vec![0.0; d];
        let mut spread = vec![0.0; d];
        match scheme {
            Scheme::MinMax => {
                let mut lo = train.row(0).to_vec();
                let mut hi = lo.clone();
                for i in 1..n {
                    for (j, &v) in train.row(i).iter().enumerate() {
                        lo[j] = lo[j].min(v);
                        hi[j] = hi[j].max(v);
                    }
                }
                for j in 0..d {
                    offset[j] = lo[j];
                    spread[j] = hi[j] - lo[j];
                }
            }
            Scheme::ZScore => {
                for i in 0..n {
                    for (o, &v) in offset.iter_mut().zip(train.row(i)) {
                        *o += v;
                    }
                }
                offset.iter_mut().for_each(|o| *o /= n as f64);
                for i in 0..n {
                    for (j, &v) in train.row(i).iter().enumerate() {
                        spread[j] += (v - offset[j]) * (v - offset[j]);
                    }
                }
                spread.iter_mut().for_each(|s| *s = (*s / n as f64).sqrt());
            }
        }
        Ok(Self { scheme, offset, spread })
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.offset.iter().zip(&self.spread))
            .map(|(&v, (&o, &s))| if s > 0.0 { (v - o) / s } else { 0.0 })
            .collect()
    }

    pub fn apply_matrix(&self, m: &Matrix) -> Matrix {
        let rows: Vec<Vec<f64>> = (0..m.rows()).map(|i| self.apply(m.row(i))).collect();
        Matrix::from_vec(m.rows(), m.cols(), rows.concat())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn col(v: &[f64]) -> Matrix {
        Matrix::from_vec(v.len(), 1, v.to_vec())
    }

    #[test]
    fn minmax_midpoint() {
        let n = Normalizer::fit(&col(&[0.0, 10.0]), Scheme::MinMax).unwrap();
        assert_eq!(n.apply(&[5.0]), [0.5]);
    }

    #[test]
    fn zero_spread_maps_to_zero() {
        for s in Scheme::ALL {
            let n = Normalizer::fit(&col(&[1.0, 1.0, 1.0]), s).unwrap();
            assert_eq!(n.apply(&[123.0]), [0.0]);
        }
    }

    #[test]
    fn zscore_two_four() {
        let n = Normalizer::fit(&col(&[2.0, 4.0]), Scheme::ZScore).unwrap();
        assert_eq!(n.apply(&[4.0]), [1.0]);
        assert!(Normalizer::fit(&Matrix::zeros(0, 3), Scheme::ZScore).is_err());
    }

    proptest! {
        #[test]
        fn zscore_standardizes(rows in prop::collection::vec(prop::collection::vec(-50.0f64..50.0, 3), 2..30)) {
            let m = Matrix::from_rows(&rows);
            let n = Normalizer::fit(&m, Scheme::ZScore).unwrap();
            let z = n.apply_matrix(&m);
            for j in 0..3 {
                let c = z.column(j);
                if n.spread[j] == 0.0 || n.spread[j] < 1e-9 {
                    continue;
                }
                let mean = c.iter().sum::<f64>() / c.len() as f64;
                let sd = (c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / c.len() as f64).sqrt();
                prop_assert!(mean.abs() <= 1e-10);
                prop_assert!((sd - 1.0).abs() <= 1e-10);
            }
            let mm = Normalizer::fit(&m, Scheme::MinMax).unwrap().apply_matrix(&m);
            prop_assert!(mm.as_slice().iter().all(|&v| (-1e-12..=1.0 + 1e-12).contains(&v)));
        }
    }
}
