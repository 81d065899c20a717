use std::fmt::Write as _;

use super::{EvalReport, PartitionScheme, Scenario};

/// Plain-text table: left-aligned first column, right-aligned others.
pub fn aligned(header: &[String], rows: &[Vec<String>]) -> String {
    let cols = header.len();
    let mut width = vec![0; cols];
    for r in std::iter::once(header).chain(rows.iter().map(Vec::as_slice)) {
        for (w, cell) in width.iter_mut().zip(r) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |r: &[String]| {
        let mut s = String::new();
        for (i, cell) in r.iter().enumerate() {
            if i > 0 {
                s.push_str("  ");
            }
            let pad = width[i] - cell.chars().count();
            if i == 0 {
                s.push_str(cell);
                s.push_str(&" ".repeat(pad));
            } else {
                s.push_str(&" ".repeat(pad));
                s.push_str(cell);
            }
        }
        s.trim_end().to_string()
    };
    let mut out = line(header);
    out.push('\n');
    out.push_str(&"-".repeat(width.iter().sum::<usize>() + 2 * (cols - 1)));
    out.push('\n');
    for r in rows {
        out.push_str(&line(r));
        out.push('\n');
    }
    out
}

fn pct(x: f64, star: bool) -> String {
    format!("{:.2}{}", 100.0 * x, if star { "*" } else { "" })
}

fn best_for<'a>(reports: &'a [EvalReport], pick: impl Fn(&EvalReport) -> bool) -> Option<&'a EvalReport> {
    let mut best: Option<&EvalReport> = None;
    for r in reports.iter().filter(|r| pick(r)) {
        if best.map_or(true, |b| r.macro_recall > b.macro_recall) {
            best = Some(r);
        }
    }
    best
}

/// Best macro recall (%) per partition scheme and scenario, with the
/// chance level on top. `*` marks p < 0.05 against chance.
pub fn partition_table(reports: &[EvalReport]) -> String {
    let header: Vec<String> =
        std::iter::once("Partition".to_string()).chain(Scenario::ALL.iter().map(|s| s.title().to_string())).collect();
    let mut rows = vec![std::iter::once("Chance".to_string())
        .chain(Scenario::ALL.iter().map(|s| format!("{:.2}", 100.0 / s.classes() as f64)))
        .collect::<Vec<_>>()];
    for p in PartitionScheme::ALL {
        if !reports.iter().any(|r| r.partition == p) {
            continue;
        }
        let mut row = vec![p.title().to_string()];
        for s in Scenario::ALL {
            row.push(
                best_for(reports, |r| r.partition == p && r.scenario == s)
                    .map_or("-".into(), |r| pct(r.macro_recall, r.significant())),
            );
        }
        rows.push(row);
    }
    aligned(&header, &rows)
}

/// Macro recall (%) per feature-family set and scenario, best partition
/// for each cell.
pub fn subset_table(reports: &[EvalReport]) -> String {
    let header: Vec<String> =
        std::iter::once("Features".to_string()).chain(Scenario::ALL.iter().map(|s| s.title().to_string())).collect();
    let mut labels: Vec<&str> = Vec::new();
    for r in reports {
        if !labels.contains(&r.families.as_str()) {
            labels.push(&r.families);
        }
    }
    let mut rows = vec![std::iter::once("Chance".to_string())
        .chain(Scenario::ALL.iter().map(|s| format!("{:.2}", 100.0 / s.classes() as f64)))
        .collect::<Vec<_>>()];
    for l in labels {
        let mut row = vec![l.to_string()];
        for s in Scenario::ALL {
            row.push(
                best_for(reports, |r| r.families == l && r.scenario == s)
                    .map_or("-".into(), |r| pct(r.macro_recall, r.significant())),
            );
        }
        rows.push(row);
    }
    aligned(&header, &rows)
}

/// Human-readable summary of one experiment.
pub fn render_report(r: &EvalReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "scenario:   {}", r.scenario.title());
    let _ = writeln!(out, "partition:  {}", r.partition.title());
    let _ = writeln!(out, "features:   {}", r.families);
    let _ = writeln!(out, "folds:      {}", r.folds);
    let _ = writeln!(out, "samples:    {}", r.predictions.len());
    let _ = writeln!(
        out,
        "macro recall: {:.2}% (chance predictor {:.2}%)",
        100.0 * r.macro_recall,
        100.0 * r.chance_macro_recall
    );
    let s = &r.significance;
    let _ = writeln!(
        out,
        "{}: statistic {:.4}, df {}, p = {:.4}{}",
        s.test,
        s.statistic,
        s.df,
        s.p,
        if r.significant() { " *" } else { "" }
    );
    if let Some(n) = &s.note {
        let _ = writeln!(out, "  note: {n}");
    }
    out.push('\n');
    let header: Vec<String> = std::iter::once("true \\ predicted".to_string())
        .chain(r.classes.iter().cloned())
        .chain(["recall".to_string()])
        .collect();
    let rows: Vec<Vec<String>> = r
        .confusion
        .iter()
        .enumerate()
        .map(|(i, row)| {
            std::iter::once(r.classes[i].clone())
                .chain(row.iter().map(u64::to_string))
                .chain([r.class_recall[i].map_or("-".into(), |x| pct(x, false))])
                .collect()
        })
        .collect();
    out.push_str(&aligned(&header, &rows));
    out.push('\n');
    let _ = writeln!(
        out,
        "per speaker ({} speakers, majority over sessions): macro recall {}",
        r.speaker_view.speakers,
        r.speaker_view.macro_recall.map_or("undefined".into(), |x| format!("{:.2}%", 100.0 * x))
    );
    if !r.flags.is_empty() {
        let _ = writeln!(out, "\n{} flagged model(s):", r.flags.len());
        for f in &r.flags {
            let _ = writeln!(out, "  {f}");
        }
    }
    out
}
