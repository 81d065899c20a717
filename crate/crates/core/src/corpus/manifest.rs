use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use super::{RiskLabel, Role, SessionFiles, SessionRecord, SessionType, Speaker};
use crate::error::{Error, Issue, Result};
use crate::time::Millis;

/// Reads a JSON-lines session manifest. Relative artifact paths are
/// resolved against the manifest's directory and must exist.
///
/// All problems are collected and returned together in
/// [`Error::Manifest`]; nothing is dropped silently.
pub fn parse_manifest(path: &Path) -> Result<Vec<SessionRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse_manifest_str(&text, base, true)
}

pub fn parse_manifest_str(text: &str, base_dir: &Path, check_files: bool) -> Result<Vec<SessionRecord>> {
    let mut issues = Vec::new();
    let mut records = Vec::new();
    let mut seen_ids = HashSet::new();

    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let line_ref = format!("<line {}>", idx + 1);
        let obj = match serde_json::from_str::<Value>(line) {
            Ok(Value::Object(o)) => o,
            Ok(_) => {
                issues.push(Issue::new(line_ref, "<record>", "manifest line is not a JSON object"));
                continue;
            }
            Err(e) => {
                issues.push(Issue::new(line_ref, "<record>", format!("invalid JSON: {e}")));
                continue;
            }
        };
        let before = issues.len();
        let sid = obj.get("session_id").and_then(Value::as_str).map(str::to_string);
        let who = sid.clone().unwrap_or(line_ref);
        if sid.is_none() {
            issues.push(Issue::new(&who, "session_id", "missing field"));
        }
        if let Some(id) = &sid {
            if !seen_ids.insert(id.clone()) {
                issues.push(Issue::new(&who, "session_id", "duplicate session_id"));
            }
        }
        let record = parse_record(&obj, &who, base_dir, check_files, &mut issues);
        if let (Some(r), true) = (record, issues.len() == before) {
            records.push(r);
        }
    }

    check_couples(&records, &mut issues);
    if !issues.is_empty() {
        return Err(Error::Manifest(issues));
    }
    if records.is_empty() {
        log::warn!("manifest contains no sessions");
    }
    Ok(records)
}

fn get_str<'a>(obj: &'a Map<String, Value>, who: &str, field: &str, issues: &mut Vec<Issue>) -> Option<&'a str> {
    match obj.get(field) {
        None | Some(Value::Null) => {
            issues.push(Issue::new(who, field, "missing field"));
            None
        }
        Some(Value::String(s)) => Some(s),
        Some(_) => {
            issues.push(Issue::new(who, field, "expected a string"));
            None
        }
    }
}

fn get_positive(obj: &Map<String, Value>, who: &str, field: &str, issues: &mut Vec<Issue>) -> Option<f64> {
    match obj.get(field) {
        None | Some(Value::Null) => {
            issues.push(Issue::new(who, field, "missing field"));
            None
        }
        Some(v) => match v.as_f64() {
            Some(x) if x > 0.0 && x.is_finite() => Some(x),
            _ => {
                issues.push(Issue::new(who, field, "expected a positive number"));
                None
            }
        },
    }
}

fn resolve(base: &Path, raw: &str, who: &str, field: &str, check: bool, issues: &mut Vec<Issue>) -> PathBuf {
    let p = Path::new(raw);
    let full = if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
    if check && !full.exists() {
        issues.push(Issue::new(who, field, format!("file not found: {}", full.display())));
    }
    full
}

fn parse_record(
    obj: &Map<String, Value>,
    who: &str,
    base: &Path,
    check_files: bool,
    issues: &mut Vec<Issue>,
) -> Option<SessionRecord> {
    let session_id = obj.get("session_id").and_then(Value::as_str).unwrap_or_default().to_string();
    let couple_id = get_str(obj, who, "couple_id", issues).map(str::to_string);
    let session_type = get_str(obj, who, "session_type", issues)
        .and_then(|s| s.parse::<SessionType>().map_err(|e| issues.push(Issue::new(who, "session_type", e))).ok());
    let duration = get_positive(obj, who, "duration_s", issues);
    let frame_period_s = get_positive(obj, who, "frame_period_s", issues);
    let speakers = parse_speakers(obj.get("speakers"), who, issues);

    let mut path = |field: &str| get_str(obj, who, field, issues).map(|raw| (field.to_string(), raw.to_string()));
    let raw_paths: Vec<_> = ["rttm", "ctm", "frames", "behavior_dir"].iter().map(|f| path(f)).collect();
    let raw_embeddings = match obj.get("embeddings") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => {
            issues.push(Issue::new(who, "embeddings", "expected a string"));
            None
        }
    };
    let mut resolved = Vec::new();
    for entry in raw_paths {
        let (field, raw) = entry?;
        resolved.push(resolve(base, &raw, who, &field, check_files, issues));
    }
    let embeddings = raw_embeddings.map(|raw| resolve(base, &raw, who, "embeddings", check_files, issues));
    let [rttm, ctm, frames, behavior_dir]: [PathBuf; 4] = resolved.try_into().ok()?;

    Some(SessionRecord {
        session_id,
        couple_id: couple_id?,
        session_type: session_type?,
        speakers: speakers?,
        duration: Millis::from_secs_f64(duration?),
        frame_period_s: frame_period_s?,
        files: SessionFiles { rttm, ctm, frames, behavior_dir, embeddings },
    })
}

fn parse_speakers(value: Option<&Value>, who: &str, issues: &mut Vec<Issue>) -> Option<[Speaker; 2]> {
    let arr = match value {
        None | Some(Value::Null) => {
            issues.push(Issue::new(who, "speakers", "missing field"));
            return None;
        }
        Some(Value::Array(a)) => a,
        Some(_) => {
            issues.push(Issue::new(who, "speakers", "expected an array"));
            return None;
        }
    };
    if arr.len() != 2 {
        issues.push(Issue::new(who, "speakers", format!("couple with {} speakers (expected 2)", arr.len())));
        return None;
    }
    let mut husband = None;
    let mut wife = None;
    let mut ok = true;
    for (i, sp) in arr.iter().enumerate() {
        let field = format!("speakers[{i}]");
        let role = sp.get("role").and_then(Value::as_str).map(str::parse::<Role>);
        let risk = sp.get("risk").and_then(Value::as_str).map(str::parse::<RiskLabel>);
        let (role, risk) = match (role, risk) {
            (Some(Ok(role)), Some(Ok(risk))) => (role, risk),
            (role, risk) => {
                for (name, r) in [("role", role.map(|r| r.map(|_| ()))), ("risk", risk.map(|r| r.map(|_| ())))] {
                    match r {
                        None => issues.push(Issue::new(who, format!("{field}.{name}"), "missing field")),
                        Some(Err(e)) => issues.push(Issue::new(who, format!("{field}.{name}"), e)),
                        Some(Ok(())) => {}
                    }
                }
                ok = false;
                continue;
            }
        };
        let slot = match role {
            Role::Husband => &mut husband,
            Role::Wife => &mut wife,
        };
        if slot.is_some() {
            issues.push(Issue::new(who, "speakers", format!("role duplication: two {role} entries")));
            ok = false;
        }
        *slot = Some(Speaker { role, risk });
    }
    if !ok {
        return None;
    }
    Some([husband?, wife?])
}

fn check_couples(records: &[SessionRecord], issues: &mut Vec<Issue>) {
    let mut by_couple: BTreeMap<&str, Vec<&SessionRecord>> = BTreeMap::new();
    for r in records {
        by_couple.entry(&r.couple_id).or_default().push(r);
    }
    for (couple, sessions) in by_couple {
        if sessions.len() > 3 {
            for s in &sessions[3..] {
                issues.push(Issue::new(
                    &s.session_id,
                    "couple_id",
                    format!("couple {couple} has more than 3 sessions"),
                ));
            }
        }
        let mut types = HashSet::new();
        for s in &sessions {
            if !types.insert(s.session_type) {
                issues.push(Issue::new(
                    &s.session_id,
                    "session_type",
                    format!("couple {couple} has two {} sessions", s.session_type.as_str()),
                ));
            }
        }
        let first = sessions[0];
        for s in &sessions[1..] {
            for role in Role::BOTH {
                if s.speaker(role).risk != first.speaker(role).risk {
                    issues.push(Issue::new(
                        &s.session_id,
                        "speakers",
                        format!("{role} risk differs from session {} of couple {couple}", first.session_id),
                    ));
                }
            }
        }
    }
}

fn relative(path: &Path, base: &Path) -> String {
    path.strip_prefix(base).unwrap_or(path).to_string_lossy().into_owned()
}

/// One manifest line for `record`, with paths made relative to `base_dir`
/// where possible.
pub fn write_manifest_line(record: &SessionRecord, base_dir: &Path) -> String {
    let f = &record.files;
    let mut obj = json!({
        "session_id": record.session_id,
        "couple_id": record.couple_id,
        "session_type": record.session_type.as_str(),
        "duration_s": record.duration.as_secs(),
        "frame_period_s": record.frame_period_s,
        "speakers": record.speakers.iter().map(|s| json!({"role": s.role.as_str(), "risk": s.risk.as_str()})).collect::<Vec<_>>(),
        "rttm": relative(&f.rttm, base_dir),
        "ctm": relative(&f.ctm, base_dir),
        "frames": relative(&f.frames, base_dir),
        "behavior_dir": relative(&f.behavior_dir, base_dir),
    });
    if let Some(e) = &f.embeddings {
        obj["embeddings"] = Value::String(relative(e, base_dir));
    }
    obj.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(id: &str, couple: &str, ty: &str, roles: [(&str, &str); 2]) -> String {
        json!({
            "session_id": id, "couple_id": couple, "session_type": ty, "duration_s": 600.0,
            "frame_period_s": 0.1,
            "speakers": [{"role": roles[0].0, "risk": roles[0].1}, {"role": roles[1].0, "risk": roles[1].1}],
            "rttm": format!("{id}.rttm"), "ctm": format!("{id}.ctm"), "frames": format!("{id}.csv"),
            "behavior_dir": "behavior"
        })
        .to_string()
    }

    fn parse(text: &str) -> Result<Vec<SessionRecord>> {
        parse_manifest_str(text, Path::new("/corpus"), false)
    }

    #[test]
    fn parses_valid_record() {
        let recs = parse(&line("s1", "c1", "W-Conflict", [("Wife", "attempt"), ("Husband", "none")])).unwrap();
        assert_eq!(recs.len(), 1);
        let r = &recs[0];
        assert_eq!(r.session_type, SessionType::WConflict);
        assert_eq!(r.speaker(Role::Wife).risk, RiskLabel::Attempt);
        assert_eq!(r.speakers[0].role, Role::Husband);
        assert_eq!(r.files.rttm, PathBuf::from("/corpus/s1.rttm"));
        assert_eq!(r.duration, Millis(600_000));
    }

    #[test]
    fn empty_manifest_is_empty() {
        assert!(parse("").unwrap().is_empty());
    }

    #[test]
    fn role_duplication() {
        let err = parse(&line("s1", "c1", "RFL", [("Husband", "none"), ("Husband", "none")])).unwrap_err();
        assert!(err.to_string().contains("role duplication"), "{err}");
    }

    #[test]
    fn every_issue_is_reported_with_session_and_field() {
        let mut text = line("s1", "c1", "Lunch", [("Husband", "none"), ("Wife", "none")]);
        text.push('\n');
        text.push_str(&line("s1", "c1", "RFL", [("Husband", "none"), ("Wife", "sometimes")]));
        text.push('\n');
        text.push_str(r#"{"session_id":"s3","couple_id":"c2"}"#);
        let Error::Manifest(issues) = parse(&text).unwrap_err() else { panic!() };
        let has = |sid: &str, field: &str| issues.iter().any(|i| i.session_id == sid && i.field == field);
        assert!(has("s1", "session_type"));
        assert!(has("s1", "session_id")); // duplicate
        assert!(has("s1", "speakers[1].risk"));
        for f in ["session_type", "duration_s", "speakers", "rttm", "ctm", "frames", "behavior_dir"] {
            assert!(has("s3", f), "missing issue for {f}: {issues:?}");
        }
    }

    #[test]
    fn couple_consistency() {
        let text = [
            line("a", "c1", "RFL", [("Husband", "none"), ("Wife", "none")]),
            line("b", "c1", "RFL", [("Husband", "ideation"), ("Wife", "none")]),
        ]
        .join("\n");
        let Error::Manifest(issues) = parse(&text).unwrap_err() else { panic!() };
        assert!(issues.iter().any(|i| i.message.contains("two RFL")));
        assert!(issues.iter().any(|i| i.message.contains("risk differs")));
    }

    #[test]
    fn missing_files_are_named() {
        let dir = tempfile::tempdir().unwrap();
        let err =
            parse_manifest_str(&line("s1", "c1", "RFL", [("Husband", "none"), ("Wife", "none")]), dir.path(), true)
                .unwrap_err();
        assert!(err.to_string().contains("s1.rttm"), "{err}");
    }

    #[test]
    fn write_then_parse() {
        let recs = parse(&line("s1", "c1", "H-Conflict", [("Husband", "ideation"), ("Wife", "none")])).unwrap();
        let text = write_manifest_line(&recs[0], Path::new("/corpus"));
        assert!(text.contains("\"rttm\":\"s1.rttm\""));
        assert_eq!(parse(&text).unwrap(), recs);
    }

    #[test]
    fn sixty_two_couples_minus_one_session() {
        // 62 couples x 3 sessions with one session missing -> 185 sessions, 370 speaker-sessions
        let types = ["RFL", "W-Conflict", "H-Conflict"];
        let mut lines = Vec::new();
        for c in 0..62 {
            for (k, ty) in types.iter().enumerate() {
                if c == 17 && k == 2 {
                    continue;
                }
                lines.push(line(
                    &format!("c{c}_{k}"),
                    &format!("c{c}"),
                    ty,
                    [("Husband", "none"), ("Wife", "ideation")],
                ));
            }
        }
        let recs = parse(&lines.join("\n")).unwrap();
        assert_eq!(recs.len(), 185);
        assert_eq!(recs.iter().map(|r| r.speakers.len()).sum::<usize>(), 370);
    }
}
