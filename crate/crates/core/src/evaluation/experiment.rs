use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    chance_baseline, class_recalls, confusion, couple_labels, macro_recall, mcnemar, plan_folds, stuart_maxwell,
    FoldPlan, PartitionScheme, Scenario,
};
use crate::corpus::{Role, SessionType};
use crate::error::{Error, Result};
use crate::features::{Family, FeatureTable};
use crate::linalg::Matrix;
use crate::model::{present_classes, search, Config, HyperGrid, LabeledSet, SmoParams};
use crate::seed::sub_seed;

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub scenario: Scenario,
    pub partition: PartitionScheme,
    pub families: Vec<Family>,
    pub grid: HyperGrid,
    pub smo: SmoParams,
    pub seed: u64,
}

impl ExperimentSpec {
    /// Full grid, default solver settings.
    pub fn new(scenario: Scenario, partition: PartitionScheme, families: &[Family], seed: u64) -> Self {
        Self {
            scenario,
            partition,
            families: families.to_vec(),
            grid: HyperGrid::full(),
            smo: SmoParams::default(),
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub fold: usize,
    pub session_id: String,
    pub couple_id: String,
    pub role: Role,
    pub session_type: SessionType,
    pub model: usize,
    pub truth: usize,
    pub predicted: usize,
}

/// What one partition model did in one fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldModel {
    pub fold: usize,
    pub test_couple: String,
    pub model: usize,
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    /// `None` for a majority-class predictor.
    pub config: Option<Config>,
    pub val_score: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Significance {
    pub test: String,
    pub statistic: f64,
    pub df: usize,
    pub p: f64,
    pub note: Option<String>,
}

/// Predictions collapsed to one per speaker by majority over sessions
/// (lowest class on ties).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeakerView {
    pub speakers: usize,
    pub confusion: Vec<Vec<u64>>,
    pub macro_recall: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub scenario: Scenario,
    pub partition: PartitionScheme,
    pub families: String,
    pub classes: Vec<String>,
    pub folds: usize,
    pub seed: u64,
    pub predictions: Vec<Prediction>,
    pub confusion: Vec<Vec<u64>>,
    pub macro_recall: f64,
    pub class_recall: Vec<Option<f64>>,
    pub chance_macro_recall: f64,
    pub significance: Significance,
    pub speaker_view: SpeakerView,
    pub models: Vec<FoldModel>,
    pub flags: Vec<String>,
}

impl EvalReport {
    pub fn significant(&self) -> bool {
        self.significance.p < 0.05
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn subset(table: &FeatureTable, rows: &[usize], cols: &[usize], labels: &[usize]) -> LabeledSet {
    let mut data = Vec::with_capacity(rows.len() * cols.len());
    for &r in rows {
        let v = &table.rows[r].values;
        data.extend(cols.iter().map(|&c| v[c]));
    }
    LabeledSet { x: Matrix::from_vec(rows.len(), cols.len(), data), y: rows.iter().map(|&r| labels[r]).collect() }
}

fn majority(y: &[usize]) -> usize {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for &c in y {
        *counts.entry(c).or_default() += 1;
    }
    // max count, lowest class on ties
    counts.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0))).map(|(&c, _)| c).unwrap_or(0)
}

struct FoldOutput {
    predictions: Vec<Prediction>,
    models: Vec<FoldModel>,
}

/// Leave-one-couple-out evaluation of one scenario, partition scheme and
/// feature-family set.
///
/// Every partition model is tuned on its own share of the fold's
/// validation couples and applied to the test couple's speaker-sessions
/// it is responsible for. A model whose training share has a single class
/// predicts that class; a model whose validation share is empty is tuned
/// on its training share. Both cases are flagged in the report.
pub fn run_experiment(table: &FeatureTable, spec: &ExperimentSpec) -> Result<EvalReport> {
    let cols = table.family_columns(&spec.families);
    if cols.is_empty() {
        return Err(Error::Evaluation(format!("no feature columns for families {}", Family::label(&spec.families))));
    }
    let k = spec.scenario.classes();
    let labels: Vec<usize> = table.rows.iter().map(|r| spec.scenario.class_of(r.risk)).collect();
    let couples = couple_labels(table.rows.iter().zip(&labels).map(|(r, &l)| (r.couple_id.as_str(), l)));
    let plan = plan_folds(&couples, sub_seed(spec.seed, "folds"))?;
    check_plan(&plan)?;
    let model_of: Vec<usize> = table.rows.iter().map(|r| spec.partition.select_model(r.role, r.session_type)).collect();

    let outputs: Vec<FoldOutput> = plan
        .folds
        .par_iter()
        .enumerate()
        .map(|(fi, fold)| {
            let train_set: BTreeSet<&str> = fold.train.iter().map(String::as_str).collect();
            let val_set: BTreeSet<&str> = fold.val.iter().map(String::as_str).collect();
            let mut predictions = Vec::new();
            let mut models = Vec::new();
            for m in 0..spec.partition.model_count() {
                let pick = |set: &dyn Fn(&str) -> bool| -> Vec<usize> {
                    (0..table.len()).filter(|&i| model_of[i] == m && set(&table.rows[i].couple_id)).collect()
                };
                let test_rows = pick(&|c| c == fold.test);
                if test_rows.is_empty() {
                    continue;
                }
                let train_rows = pick(&|c| train_set.contains(c));
                let val_rows = pick(&|c| val_set.contains(c));
                if test_rows.iter().chain(&train_rows).chain(&val_rows).any(|&i| {
                    let c = table.rows[i].couple_id.as_str();
                    (c == fold.test) != test_rows.contains(&i)
                }) {
                    return Err(Error::Evaluation(format!(
                        "fold {fi}: test couple {} leaked into training",
                        fold.test
                    )));
                }
                if train_rows.is_empty() {
                    return Err(Error::Evaluation(format!("fold {fi}: partition model {m} has no training data")));
                }
                let train = subset(table, &train_rows, &cols, &labels);
                let mut record = FoldModel {
                    fold: fi,
                    test_couple: fold.test.clone(),
                    model: m,
                    n_train: train_rows.len(),
                    n_val: val_rows.len(),
                    n_test: test_rows.len(),
                    config: None,
                    val_score: None,
                    note: None,
                };
                let predicted: Vec<usize> = if present_classes(&train.y).len() < 2 {
                    let c = majority(&train.y);
                    record.note = Some(format!("single-class training set; predicts class {c}"));
                    vec![c; test_rows.len()]
                } else {
                    let val = if val_rows.is_empty() {
                        record.note = Some("empty validation set; tuned on training data".into());
                        train.clone()
                    } else {
                        let v = subset(table, &val_rows, &cols, &labels);
                        if present_classes(&v.y).len() < 2 {
                            record.note = Some("single-class validation set".into());
                        }
                        v
                    };
                    let result = search(&train, &val, &spec.grid, &spec.smo)?;
                    record.config = Some(result.best);
                    record.val_score = Some(result.best_score);
                    test_rows
                        .iter()
                        .map(|&i| {
                            let x: Vec<f64> = cols.iter().map(|&c| table.rows[i].values[c]).collect();
                            result.pipeline.predict(&x)
                        })
                        .collect::<Result<_>>()?
                };
                for (&i, p) in test_rows.iter().zip(predicted) {
                    let r = &table.rows[i];
                    predictions.push(Prediction {
                        fold: fi,
                        session_id: r.session_id.clone(),
                        couple_id: r.couple_id.clone(),
                        role: r.role,
                        session_type: r.session_type,
                        model: m,
                        truth: labels[i],
                        predicted: p,
                    });
                }
                models.push(record);
            }
            Ok(FoldOutput { predictions, models })
        })
        .collect::<Result<_>>()?;

    let mut predictions: Vec<Prediction> = outputs.iter().flat_map(|o| o.predictions.iter().cloned()).collect();
    predictions.sort_by(|a, b| (a.fold, &a.session_id, a.role).cmp(&(b.fold, &b.session_id, b.role)));
    if predictions.len() != table.len() {
        return Err(Error::Evaluation(format!(
            "{} predictions for {} speaker-sessions",
            predictions.len(),
            table.len()
        )));
    }
    let models: Vec<FoldModel> = outputs.into_iter().flat_map(|o| o.models).collect();
    let flags: Vec<String> = models
        .iter()
        .filter_map(|m| {
            m.note.as_ref().map(|n| format!("fold {} (test {}) model {}: {n}", m.fold, m.test_couple, m.model))
        })
        .collect();

    let pairs: Vec<(usize, usize)> = predictions.iter().map(|p| (p.truth, p.predicted)).collect();
    let truth: Vec<usize> = pairs.iter().map(|p| p.0).collect();
    let chance = chance_baseline(&truth, k, sub_seed(spec.seed, "chance"))?;
    let chance_pairs: Vec<(usize, usize)> = truth.iter().copied().zip(chance.iter().copied()).collect();
    let significance = if k == 2 {
        let b = pairs.iter().zip(&chance).filter(|((t, p), &c)| p == t && c != *t).count() as u64;
        let c = pairs.iter().zip(&chance).filter(|((t, p), &c)| p != t && c == *t).count() as u64;
        let m = mcnemar(b, c)?;
        Significance { test: "McNemar".into(), statistic: m.statistic, df: 1, p: m.p, note: m.note }
    } else {
        let mut t = vec![vec![0u64; k]; k];
        for ((_, p), &c) in pairs.iter().zip(&chance) {
            t[*p][c] += 1;
        }
        match stuart_maxwell(&t) {
            Ok(s) => Significance {
                test: "Stuart-Maxwell".into(),
                statistic: s.statistic,
                df: s.df,
                p: s.p,
                note: (!s.dropped.is_empty()).then(|| format!("categories {:?} dropped", s.dropped)),
            },
            Err(e) => {
                Significance { test: "Stuart-Maxwell".into(), statistic: 0.0, df: 0, p: 1.0, note: Some(e.to_string()) }
            }
        }
    };

    Ok(EvalReport {
        scenario: spec.scenario,
        partition: spec.partition,
        families: Family::label(&spec.families),
        classes: spec.scenario.class_names().iter().map(|s| s.to_string()).collect(),
        folds: plan.len(),
        seed: spec.seed,
        confusion: confusion(&pairs, k)?,
        macro_recall: macro_recall(&pairs, k)?,
        class_recall: class_recalls(&pairs, k)?,
        chance_macro_recall: macro_recall(&chance_pairs, k)?,
        significance,
        speaker_view: speaker_view(&predictions, k)?,
        predictions,
        models,
        flags,
    })
}

fn check_plan(plan: &FoldPlan) -> Result<()> {
    for (i, f) in plan.folds.iter().enumerate() {
        if f.train.contains(&f.test) || f.val.contains(&f.test) || f.train.iter().any(|c| f.val.contains(c)) {
            return Err(Error::Evaluation(format!("fold {i}: splits overlap")));
        }
    }
    Ok(())
}

fn speaker_view(predictions: &[Prediction], k: usize) -> Result<SpeakerView> {
    let mut by_speaker: BTreeMap<(&str, Role), (usize, Vec<usize>)> = BTreeMap::new();
    for p in predictions {
        by_speaker.entry((p.couple_id.as_str(), p.role)).or_insert((p.truth, Vec::new())).1.push(p.predicted);
    }
    let pairs: Vec<(usize, usize)> = by_speaker.values().map(|(t, preds)| (*t, majority(preds))).collect();
    let conf = confusion(&pairs, k)?;
    let recall = macro_recall(&pairs, k).ok();
    Ok(SpeakerView { speakers: pairs.len(), confusion: conf, macro_recall: recall })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetReport {
    pub scenario: Scenario,
    pub partition: PartitionScheme,
    pub reports: Vec<EvalReport>,
    /// Index into `reports` of the highest macro recall (first on ties).
    pub best: usize,
}

impl SubsetReport {
    pub fn best_report(&self) -> &EvalReport {
        &self.reports[self.best]
    }
}

/// Runs the same experiment for each feature-family subset.
pub fn run_subsets(table: &FeatureTable, spec: &ExperimentSpec, subsets: &[Vec<Family>]) -> Result<SubsetReport> {
    if subsets.is_empty() {
        return Err(Error::Evaluation("no feature-family subsets given".into()));
    }
    let mut reports = Vec::with_capacity(subsets.len());
    for families in subsets {
        let s = ExperimentSpec { families: families.clone(), ..spec.clone() };
        reports.push(run_experiment(table, &s)?);
    }
    let mut best = 0;
    for (i, r) in reports.iter().enumerate() {
        if r.macro_recall > reports[best].macro_recall {
            best = i;
        }
    }
    Ok(SubsetReport { scenario: spec.scenario, partition: spec.partition, reports, best })
}
