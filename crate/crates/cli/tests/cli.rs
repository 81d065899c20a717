use std::path::Path;
use std::process::{Command, Output};

fn dyadrisk(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dyadrisk")).current_dir(dir).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn synth(dir: &Path, couples: &str, extra: &[&str]) {
    let mut args = vec!["synth", "--couples", couples, "--seed", "7", "--session-s", "240"];
    args.extend_from_slice(extra);
    let o = dyadrisk(dir, &args);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn synth_extract_train_report() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth(dir, "8", &[]);
    assert!(dir.join("corpus/manifest.jsonl").exists());

    let o = dyadrisk(dir, &["validate"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("24 sessions, 0 error(s), 0 warning(s)"));

    let o = dyadrisk(dir, &["extract"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("48 speaker-sessions, 3859 features (A=228, E=3458, L=6, T=167)"), "{}", stdout(&o));
    let csv = std::fs::read_to_string(dir.join("out/features.csv")).unwrap();
    assert_eq!(csv.lines().count(), 49);
    assert_eq!(csv.lines().next().unwrap().split(',').count(), 5 + 3859);

    let o = dyadrisk(dir, &["train-eval", "--features", "out/features.csv", "--scenario", "no-risk-vs-risk"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("McNemar"));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("out/report.json")).unwrap()).unwrap();
    assert_eq!(json["reports"].as_array().unwrap().len(), 1);
    assert_eq!(json["reports"][0]["predictions"].as_array().unwrap().len(), 48);
    assert_eq!(json["reports"][0]["folds"], 8);

    let o = dyadrisk(dir, &["report", "--input", "out/report.json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), std::fs::read_to_string(dir.join("out/report.txt")).unwrap());

    let o = dyadrisk(dir, &["analyze", "--features", "out/features.csv", "--top", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.join("out/correlations.csv")).unwrap();
    assert!(csv.lines().count() >= 4);
}

#[test]
fn families_and_partitions_from_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth(dir, "8", &[]);
    let o = dyadrisk(dir, &["extract", "--families", "L,T", "--out", "lt"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("173 features (L=6, T=167)"), "{}", stdout(&o));
    let o = dyadrisk(
        dir,
        &["train-eval", "--features", "lt/features.csv", "--families", "L,T", "--partition", "all", "--out", "lt"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("lt/report.json")).unwrap()).unwrap();
    let partitions: Vec<&str> =
        json["reports"].as_array().unwrap().iter().map(|r| r["partition"].as_str().unwrap()).collect();
    assert_eq!(partitions.len(), 4);
    assert!(stdout(&o).contains("Best macro recall (%) per partition scheme"));
}

#[test]
fn anonymous_corpus_is_diarized() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth(dir, "3", &["--anonymous-tags"]);
    let o = dyadrisk(dir, &["diarize"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let roles = std::fs::read_to_string(dir.join("out/roles.jsonl")).unwrap();
    assert_eq!(roles.lines().count(), 9);
    let rttm = std::fs::read_to_string(dir.join("out/diarization.rttm")).unwrap();
    assert!(rttm.lines().all(|l| l.contains(" H ") || l.contains(" W ")));

    // no reference speaker labels, so there is nothing to tune on
    let o = dyadrisk(dir, &["tune-p"]);
    assert_eq!(o.status.code(), Some(1));

    // extraction diarizes on the fly
    let o = dyadrisk(dir, &["extract"]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn tune_p_writes_curve() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth(dir, "2", &[]);
    let o = dyadrisk(dir, &["tune-p", "--grid", "0.2,0.5,0.8", "--dev-sessions", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("out/tune_p.json")).unwrap()).unwrap();
    assert_eq!(v["curve"].as_array().unwrap().len(), 3);
    assert_eq!(v["p"], 0.2);
}

#[test]
fn config_file_supplies_seed_and_paths() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth(dir, "3", &[]);
    let cfg = r#"{"manifest": "corpus/manifest.jsonl", "lexicon": "corpus/lexicon.txt", "seed": 3, "output_dir": "cfg-out", "families": "L"}"#;
    std::fs::write(dir.join("run.json"), cfg).unwrap();
    let o = dyadrisk(dir, &["extract", "--config", "run.json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.join("cfg-out/features.csv").exists());

    std::fs::write(dir.join("bad.json"), r#"{"manifest": "m", "lexicon": "l"}"#).unwrap();
    let o = dyadrisk(dir, &["extract", "--config", "bad.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("seed"), "{}", stderr(&o));
}

#[test]
fn missing_file_fails_validation() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth(dir, "2", &[]);
    let victim = dir.join("corpus/frames/c001-wc.csv");
    std::fs::remove_file(&victim).unwrap();
    let o = dyadrisk(dir, &["validate"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("frames/c001-wc.csv"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(dyadrisk(tmp.path(), &["nonsense"]).status.code(), Some(2));
    assert_eq!(dyadrisk(tmp.path(), &["synth", "--couples", "x"]).status.code(), Some(2));
    assert_eq!(dyadrisk(tmp.path(), &["synth", "--null", "--effects", "1,1,1,1"]).status.code(), Some(2));
    let o = dyadrisk(tmp.path(), &["synth", "--priors", "0.5,0.5"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("three values"));
    let o = dyadrisk(tmp.path(), &["validate", "--corpus", "nowhere"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("nowhere"), "{}", stderr(&o));
}

#[test]
fn twenty_couple_degree_run() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let o = dyadrisk(dir, &["synth", "--couples", "20", "--seed", "7"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = dyadrisk(dir, &["extract"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = dyadrisk(dir, &["train-eval", "--scenario", "degree", "--partition", "none"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("Stuart-Maxwell"), "{}", stdout(&o));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("out/report.json")).unwrap()).unwrap();
    let report = &json["reports"][0];
    assert_eq!(report["folds"], 20);
    assert_eq!(report["predictions"].as_array().unwrap().len(), 120);
    assert_eq!(report["confusion"].as_array().unwrap().len(), 3);
}
