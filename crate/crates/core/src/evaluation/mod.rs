//! Leave-one-couple-out evaluation: label scenarios, partition schemes,
//! fold planning, metrics and significance against a chance predictor.

mod experiment;
mod folds;
mod report;
mod significance;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{RiskLabel, Role, SessionType};
use crate::error::{Error, Result};

pub use experiment::{
    run_experiment, run_subsets, EvalReport, ExperimentSpec, FoldModel, Prediction, Significance, SpeakerView,
    SubsetReport,
};
pub use folds::{couple_labels, plan_folds, CoupleLabels, Fold, FoldPlan, VAL_FRACTION};
pub use report::{aligned as aligned_table, partition_table, render_report, subset_table};
pub use significance::{chance_baseline, mcnemar, stuart_maxwell, McNemar, StuartMaxwell};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Scenario {
    DegreeOfRisk,
    NoRiskVsRisk,
    NonSevereVsSevere,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::DegreeOfRisk, Scenario::NoRiskVsRisk, Scenario::NonSevereVsSevere];

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::DegreeOfRisk => "degree",
            Scenario::NoRiskVsRisk => "no-risk-vs-risk",
            Scenario::NonSevereVsSevere => "non-severe-vs-severe",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Scenario::DegreeOfRisk => "Degree of Risk",
            Scenario::NoRiskVsRisk => "No-Risk vs Risk",
            Scenario::NonSevereVsSevere => "Non-Severe vs Severe Risk",
        }
    }

    pub fn classes(self) -> usize {
        match self {
            Scenario::DegreeOfRisk => 3,
            _ => 2,
        }
    }

    pub fn class_of(self, risk: RiskLabel) -> usize {
        match (self, risk) {
            (Scenario::DegreeOfRisk, r) => r.degree() as usize,
            (Scenario::NoRiskVsRisk, RiskLabel::None) => 0,
            (Scenario::NoRiskVsRisk, _) => 1,
            (Scenario::NonSevereVsSevere, RiskLabel::Attempt) => 1,
            (Scenario::NonSevereVsSevere, _) => 0,
        }
    }

    pub fn class_names(self) -> &'static [&'static str] {
        match self {
            Scenario::DegreeOfRisk => &["none", "ideation", "attempt"],
            Scenario::NoRiskVsRisk => &["none", "ideation/attempt"],
            Scenario::NonSevereVsSevere => &["none/ideation", "attempt"],
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "degree" | "degree-of-risk" | "3class" => Ok(Scenario::DegreeOfRisk),
            "no-risk-vs-risk" | "risk" => Ok(Scenario::NoRiskVsRisk),
            "non-severe-vs-severe" | "severe" => Ok(Scenario::NonSevereVsSevere),
            other => Err(Error::InvalidArgument(format!("unknown scenario `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PartitionScheme {
    None,
    Gender,
    Content,
    Demand,
}

impl PartitionScheme {
    pub const ALL: [PartitionScheme; 4] =
        [PartitionScheme::None, PartitionScheme::Gender, PartitionScheme::Content, PartitionScheme::Demand];

    pub fn as_str(self) -> &'static str {
        match self {
            PartitionScheme::None => "none",
            PartitionScheme::Gender => "gender",
            PartitionScheme::Content => "content",
            PartitionScheme::Demand => "demand",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            PartitionScheme::None => "None",
            PartitionScheme::Gender => "Gender",
            PartitionScheme::Content => "Content",
            PartitionScheme::Demand => "Demand",
        }
    }

    pub fn model_count(self) -> usize {
        match self {
            PartitionScheme::None => 1,
            PartitionScheme::Gender | PartitionScheme::Content => 2,
            PartitionScheme::Demand => 5,
        }
    }

    /// Index of the model responsible for a speaker in a session type.
    pub fn select_model(self, role: Role, session_type: SessionType) -> usize {
        use SessionType::*;
        match self {
            PartitionScheme::None => 0,
            PartitionScheme::Gender => match role {
                Role::Husband => 0,
                Role::Wife => 1,
            },
            PartitionScheme::Content => usize::from(session_type.is_conflict()),
            PartitionScheme::Demand => match (role, session_type) {
                (Role::Husband, Rfl) => 0,
                (Role::Wife, Rfl) => 1,
                (Role::Wife, WConflict) => 2,
                (Role::Wife, HConflict) => 3,
                (Role::Husband, WConflict | HConflict) => 4,
            },
        }
    }
}

impl fmt::Display for PartitionScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PartitionScheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(PartitionScheme::None),
            "gender" => Ok(PartitionScheme::Gender),
            "content" => Ok(PartitionScheme::Content),
            "demand" => Ok(PartitionScheme::Demand),
            other => Err(Error::InvalidArgument(format!("unknown partition scheme `{other}`"))),
        }
    }
}

/// `k x k` counts, rows true class, columns predicted class.
pub fn confusion(pairs: &[(usize, usize)], k: usize) -> Result<Vec<Vec<u64>>> {
    let mut m = vec![vec![0u64; k]; k];
    for &(t, p) in pairs {
        if t >= k || p >= k {
            return Err(Error::Evaluation(format!("class index outside 0..{k} in ({t}, {p})")));
        }
        m[t][p] += 1;
    }
    Ok(m)
}

/// Unweighted mean of per-class recall over classes `0..k`.
pub fn macro_recall(pairs: &[(usize, usize)], k: usize) -> Result<f64> {
    let m = confusion(pairs, k)?;
    let mut total = 0.0;
    for (c, row) in m.iter().enumerate() {
        let n: u64 = row.iter().sum();
        if n == 0 {
            return Err(Error::Evaluation(format!("class {c} has no true samples")));
        }
        total += row[c] as f64 / n as f64;
    }
    Ok(total / k as f64)
}

/// Per-class recall, `None` for classes without true samples.
pub fn class_recalls(pairs: &[(usize, usize)], k: usize) -> Result<Vec<Option<f64>>> {
    let m = confusion(pairs, k)?;
    Ok(m.iter()
        .enumerate()
        .map(|(c, row)| {
            let n: u64 = row.iter().sum();
            (n > 0).then(|| row[c] as f64 / n as f64)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn scenario_maps() {
        use RiskLabel::*;
        let map = |s: Scenario| [None, Ideation, Attempt].map(|r| s.class_of(r));
        assert_eq!(map(Scenario::DegreeOfRisk), [0, 1, 2]);
        assert_eq!(map(Scenario::NoRiskVsRisk), [0, 1, 1]);
        assert_eq!(map(Scenario::NonSevereVsSevere), [0, 0, 1]);
        for s in Scenario::ALL {
            assert_eq!(s.as_str().parse::<Scenario>().unwrap(), s);
            assert_eq!(s.class_names().len(), s.classes());
        }
    }

    #[test]
    fn selectors_are_total_and_contiguous() {
        for scheme in PartitionScheme::ALL {
            let mut used = vec![false; scheme.model_count()];
            for role in Role::BOTH {
                for st in SessionType::ALL {
                    used[scheme.select_model(role, st)] = true;
                }
            }
            assert!(used.iter().all(|&u| u), "{scheme}");
        }
        assert_eq!(PartitionScheme::None.select_model(Role::Wife, SessionType::HConflict), 0);
        assert_eq!(PartitionScheme::Gender.select_model(Role::Wife, SessionType::Rfl), 1);
        assert_eq!(PartitionScheme::Content.select_model(Role::Husband, SessionType::WConflict), 1);
    }

    #[test]
    fn macro_recall_hand_case() {
        // [[3,1],[2,2]]
        let pairs = [(0, 0), (0, 0), (0, 0), (0, 1), (1, 0), (1, 0), (1, 1), (1, 1)];
        assert_eq!(macro_recall(&pairs, 2).unwrap(), 0.625);
        assert_eq!(macro_recall(&[(0, 0), (1, 1), (2, 2)], 3).unwrap(), 1.0);
        assert!(macro_recall(&[(0, 0), (0, 1)], 2).is_err());
    }

    #[test]
    fn uniform_predictions_near_one_third() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pairs: Vec<(usize, usize)> = (0..60_000).map(|i| (i % 3, rng.gen_range(0..3))).collect();
        assert!((macro_recall(&pairs, 3).unwrap() - 1.0 / 3.0).abs() < 0.01);
    }

    proptest! {
        #[test]
        fn recall_invariant_under_relabeling(
            pairs in prop::collection::vec((0usize..3, 0usize..3), 3..60),
            perm in Just([0usize, 1, 2]).prop_shuffle(),
        ) {
            let mut pairs = pairs;
            pairs.extend([(0, 0), (1, 1), (2, 2)]);
            let moved: Vec<(usize, usize)> = pairs.iter().map(|&(t, p)| (perm[t], perm[p])).collect();
            let a = macro_recall(&pairs, 3).unwrap();
            let b = macro_recall(&moved, 3).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
