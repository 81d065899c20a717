//! Rank correlation of every feature with the ordinal degree of risk.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::evaluation::aligned_table;
use crate::features::{Family, FeatureTable};
use crate::stats::student_t_two_sided;

/// Average ranks, 1-based; tied values share the mean of their positions.
pub fn midranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Spearman {
    pub rho: f64,
    pub p: f64,
    pub n: usize,
}

/// Spearman's rho with a two-sided p-value from the t approximation on
/// `n - 2` degrees of freedom; `|rho| = 1` gives `p = 0`.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<Spearman> {
    let n = x.len();
    if n != y.len() {
        return Err(Error::Stats(format!("spearman: {} values against {}", n, y.len())));
    }
    if n < 3 {
        return Err(Error::Stats(format!("spearman needs at least 3 pairs, got {n}")));
    }
    let (rx, ry) = (midranks(x), midranks(y));
    let mean = (n as f64 + 1.0) / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        let (da, db) = (a - mean, b - mean);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Stats("undefined correlation: constant input".into()));
    }
    let rho = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    let df = (n - 2) as f64;
    let p = if rho.abs() == 1.0 { 0.0 } else { student_t_two_sided(rho * (df / (1.0 - rho * rho)).sqrt(), df) };
    Ok(Spearman { rho, p, n })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationRow {
    pub feature: String,
    pub family: Family,
    pub rho: f64,
    pub p: f64,
    pub n: usize,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationReport {
    /// The `k` strongest correlations by `|rho|`.
    pub top: Vec<CorrelationRow>,
    /// Strongest correlation within each family present.
    pub per_family: Vec<CorrelationRow>,
    /// Columns skipped because they are constant.
    pub constant: Vec<String>,
    pub n: usize,
}

fn order(a: &CorrelationRow, b: &CorrelationRow) -> std::cmp::Ordering {
    b.rho.abs().total_cmp(&a.rho.abs()).then_with(|| a.feature.cmp(&b.feature))
}

/// Correlates every column with the risk degree (0, 1, 2) over all
/// speaker-sessions pooled.
pub fn top_correlations(table: &FeatureTable, k: usize) -> Result<CorrelationReport> {
    let y: Vec<f64> = table.rows.iter().map(|r| r.risk.degree() as f64).collect();
    let results: Vec<(String, Option<CorrelationRow>)> = (0..table.names.len())
        .into_par_iter()
        .map(|c| {
            let name = table.names[c].clone();
            let x: Vec<f64> = table.rows.iter().map(|r| r.values[c]).collect();
            let family = Family::of_name(&name)
                .ok_or_else(|| Error::Feature(format!("feature `{name}` has no family prefix")))?;
            match spearman(&x, &y) {
                Ok(s) => Ok((
                    name.clone(),
                    Some(CorrelationRow { feature: name, family, rho: s.rho, p: s.p, n: s.n, significant: s.p < 0.05 }),
                )),
                Err(Error::Stats(m)) if m.starts_with("undefined correlation") => Ok((name, None)),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    let mut constant = Vec::new();
    let mut rows = Vec::new();
    for (name, row) in results {
        match row {
            Some(r) => rows.push(r),
            None => constant.push(name),
        }
    }
    rows.sort_by(order);
    let mut per_family: Vec<CorrelationRow> = Vec::new();
    for f in Family::ALL {
        if let Some(r) = rows.iter().find(|r| r.family == f) {
            per_family.push(r.clone());
        }
    }
    per_family.sort_by(order);
    rows.truncate(k);
    Ok(CorrelationReport { top: rows, per_family, constant, n: table.len() })
}

impl CorrelationReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rank,feature,family,rho,p,n,significant\n");
        for (i, r) in self.top.iter().enumerate() {
            let _ =
                writeln!(out, "{},{},{},{:?},{:?},{},{}", i + 1, r.feature, r.family, r.rho, r.p, r.n, r.significant);
        }
        out
    }

    /// `Correlation`, `Feature`, `Family` columns; `*` marks p < 0.05.
    pub fn to_text(&self) -> String {
        let header = ["Correlation".to_string(), "Feature".to_string(), "Family".to_string()];
        let render = |rows: &[CorrelationRow]| {
            let body: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        format!("{:+.3}{}", r.rho, if r.significant { "*" } else { "" }),
                        r.feature.clone(),
                        r.family.to_string(),
                    ]
                })
                .collect();
            aligned_table(&header, &body)
        };
        let mut out = format!("Top {} features by |rho| with degree of risk (n = {})\n", self.top.len(), self.n);
        out.push_str(&render(&self.top));
        out.push_str("\nStrongest feature per family\n");
        out.push_str(&render(&self.per_family));
        out
    }
}
