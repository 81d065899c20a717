use std::path::Path;
use std::sync::{Arc, OnceLock};

use super::{Family, FeatureBlock};
use crate::corpus::{load_behavior, BehaviorSet, Role, BEHAVIOR_CONFIGS, BEHAVIOR_NAMES, H_DIM, S_DIM};
use crate::error::{Error, Result};

pub const BEHAVIOR_FEATURES: usize = BEHAVIOR_CONFIGS * (H_DIM + S_DIM);

/// `E.h<cfg>.<dim>` for the hidden block, then `E.s<cfg>.<Behavior>`.
/// Configurations and hidden dimensions are numbered from 1.
pub fn behavior_names() -> Arc<[String]> {
    static NAMES: OnceLock<Arc<[String]>> = OnceLock::new();
    NAMES
        .get_or_init(|| {
            let mut v = Vec::with_capacity(BEHAVIOR_FEATURES);
            for i in 1..=BEHAVIOR_CONFIGS {
                v.extend((1..=H_DIM).map(|j| format!("E.h{i}.{j}")));
            }
            for i in 1..=BEHAVIOR_CONFIGS {
                v.extend(BEHAVIOR_NAMES.iter().map(|b| format!("E.s{i}.{b}")));
            }
            v.into()
        })
        .clone()
}

pub fn extract_behavior(set: &BehaviorSet) -> Result<FeatureBlock> {
    let mut values = vec![0.0; BEHAVIOR_FEATURES];
    let (hs, ss) = values.split_at_mut(BEHAVIOR_CONFIGS * H_DIM);
    for i in 1..=BEHAVIOR_CONFIGS {
        let cfg = set.configs.get(&i).ok_or_else(|| Error::Feature(format!("behavior config {i} absent")))?;
        if cfg.h.len() != H_DIM {
            return Err(Error::Feature(format!("behavior config {i}: h has {} values, expected {H_DIM}", cfg.h.len())));
        }
        if cfg.s.len() != S_DIM {
            return Err(Error::Feature(format!("behavior config {i}: s has {} values, expected {S_DIM}", cfg.s.len())));
        }
        hs[(i - 1) * H_DIM..i * H_DIM].copy_from_slice(&cfg.h);
        ss[(i - 1) * S_DIM..i * S_DIM].copy_from_slice(&cfg.s);
    }
    FeatureBlock::new(Family::E, behavior_names(), values, Vec::new())
}

/// Reads `<dir>/<session>/<role>/config<i>.{h,s}.csv` and assembles the block.
pub fn extract_behavior_from_dir(dir: &Path, session_id: &str, role: Role) -> Result<FeatureBlock> {
    extract_behavior(&load_behavior(dir, session_id, role)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{write_behavior, BehaviorConfig};

    fn full_set() -> BehaviorSet {
        let mut set = BehaviorSet::default();
        for i in 1..=BEHAVIOR_CONFIGS {
            let h = (0..H_DIM).map(|j| (i * 1000 + j) as f64).collect();
            let s = (0..S_DIM).map(|j| -((i * 10 + j) as f64)).collect();
            set.configs.insert(i, BehaviorConfig { h, s });
        }
        set
    }

    #[test]
    fn layout_is_h_block_then_s_block() {
        let b = extract_behavior(&full_set()).unwrap();
        assert_eq!(b.len(), 3458);
        assert_eq!(b.names[0], "E.h1.1");
        assert_eq!(b.values[0], 1000.0);
        assert_eq!(b.names[128], "E.h2.1");
        assert_eq!(b.names[26 * 128], "E.s1.Acceptance");
        assert_eq!(b.get("E.s18.Sadness"), Some(-184.0));
        assert_eq!(b.names[3457], "E.s26.Sadness");
    }

    #[test]
    fn missing_or_misshapen_config() {
        let mut set = full_set();
        set.configs.remove(&7);
        assert_eq!(extract_behavior(&set).unwrap_err().to_string(), "features: behavior config 7 absent");
        let mut set = full_set();
        set.configs.get_mut(&3).unwrap().s.push(0.0);
        assert!(extract_behavior(&set).unwrap_err().to_string().contains("config 3"));
    }

    #[test]
    fn zeros_pass_through() {
        let mut set = BehaviorSet::default();
        for i in 1..=BEHAVIOR_CONFIGS {
            set.configs.insert(i, BehaviorConfig { h: vec![0.0; H_DIM], s: vec![0.0; S_DIM] });
        }
        assert!(extract_behavior(&set).unwrap().values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn reads_directory_layout() {
        let dir = tempfile::tempdir().unwrap();
        let set = full_set();
        write_behavior(dir.path(), "s1", Role::Wife, &set).unwrap();
        assert!(dir.path().join("s1/Wife/config26.s.csv").exists());
        let b = extract_behavior_from_dir(dir.path(), "s1", Role::Wife).unwrap();
        assert_eq!(b.values, extract_behavior(&set).unwrap().values);
    }
}
