//! Per-instance coverage of supporting and contradicting features.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::exec::Execution;
use crate::featmodel::FeatureSet;
use crate::llm::LlmRecord;
use crate::matching::{match_feature, EditPolicy, MatchResult, Matcher};
use crate::textnorm::normalize;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageRecord {
    pub instance_id: String,
    pub matcher: Matcher,
    /// Fraction of supporting features matched; `None` when there are none.
    pub support_cov: Option<f64>,
    pub contradict_cov: Option<f64>,
    pub raw_count: usize,
    /// `raw_count / k`.
    pub proportion: f64,
    /// LLM prediction equals the gold label.
    pub correct: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Support,
    Contradict,
}

/// One matcher decision, kept for manual inspection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub instance_id: String,
    pub side: Side,
    #[serde(flatten)]
    pub result: MatchResult,
}

fn fraction(matched: usize, total: usize) -> Option<f64> {
    (total > 0).then(|| matched as f64 / total as f64)
}

fn coverage_inner(
    fs: &FeatureSet,
    rationale: &crate::textnorm::NormalizedText,
    matcher: Matcher,
    policy: &EditPolicy,
    correct: bool,
    mut audit: Option<&mut Vec<AuditEntry>>,
) -> CoverageRecord {
    let mut count = |side: Side, features: &[crate::featmodel::Feature]| {
        let mut hits = 0;
        for f in features {
            let result = match_feature(matcher, &f.feature, rationale, policy);
            hits += usize::from(result.matched);
            if let Some(a) = audit.as_deref_mut() {
                a.push(AuditEntry {
                    instance_id: fs.instance_id.clone(),
                    side,
                    result,
                });
            }
        }
        hits
    };
    let s_hits = count(Side::Support, &fs.supporting);
    let c_hits = count(Side::Contradict, &fs.contradicting);
    let raw_count = s_hits + c_hits;
    CoverageRecord {
        instance_id: fs.instance_id.clone(),
        matcher,
        support_cov: fraction(s_hits, fs.supporting.len()),
        contradict_cov: fraction(c_hits, fs.contradicting.len()),
        raw_count,
        proportion: raw_count as f64 / fs.k as f64,
        correct,
    }
}

/// Coverage of one feature set by one rationale under one matcher.
pub fn coverage(
    fs: &FeatureSet,
    rationale: &str,
    matcher: Matcher,
    policy: &EditPolicy,
    correct: bool,
) -> CoverageRecord {
    coverage_inner(fs, &normalize(rationale), matcher, policy, correct, None)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BatchCoverage {
    /// Sorted by (instance id, matcher).
    pub records: Vec<CoverageRecord>,
    /// Feature sets with no LLM record, or no gold label.
    pub skipped: Vec<String>,
    /// Instances whose LLM response could not be parsed.
    pub parse_failures: Vec<String>,
    pub audit: Vec<AuditEntry>,
}

/// Joins feature sets with LLM records on instance id and scores every
/// enabled matcher. `gold` maps instance id to gold label.
pub fn batch_coverage(
    featuresets: &[FeatureSet],
    llm_records: &[LlmRecord],
    gold: &HashMap<String, String>,
    matchers: &[Matcher],
    policy: &EditPolicy,
    exec: Execution,
    keep_audit: bool,
) -> BatchCoverage {
    let by_id: HashMap<&str, &LlmRecord> = llm_records.iter().map(|r| (r.id.as_str(), r)).collect();
    let mut matchers = matchers.to_vec();
    matchers.sort();
    matchers.dedup();

    let mut out = BatchCoverage::default();
    let mut jobs: Vec<(&FeatureSet, &LlmRecord, bool)> = Vec::new();
    for fs in featuresets {
        let (Some(rec), Some(gold_label)) = (
            by_id.get(fs.instance_id.as_str()),
            gold.get(&fs.instance_id),
        ) else {
            out.skipped.push(fs.instance_id.clone());
            continue;
        };
        match &rec.predicted_label {
            Some(pred) => jobs.push((fs, rec, pred == gold_label)),
            None => out.parse_failures.push(fs.instance_id.clone()),
        }
    }
    if !out.skipped.is_empty() {
        log::warn!(
            "{} feature sets have no LLM record or gold label and were skipped",
            out.skipped.len()
        );
    }
    jobs.sort_by(|a, b| a.0.instance_id.cmp(&b.0.instance_id));

    let per_instance = exec.map_slice(&jobs, |&(fs, rec, correct)| {
        let rationale = normalize(&rec.rationale);
        let mut audit = keep_audit.then(Vec::new);
        let records: Vec<CoverageRecord> = matchers
            .iter()
            .map(|&m| coverage_inner(fs, &rationale, m, policy, correct, audit.as_mut()))
            .collect();
        (records, audit.unwrap_or_default())
    });
    for (records, audit) in per_instance {
        out.records.extend(records);
        out.audit.extend(audit);
    }
    out
}

const CSV_HEADER: [&str; 7] = [
    "instance_id",
    "matcher",
    "support_cov",
    "contradict_cov",
    "raw_count",
    "proportion",
    "correct",
];

fn opt_cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_csv(records: &[CoverageRecord], path: &Path) -> std::io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.instance_id.clone(),
            r.matcher.to_string(),
            opt_cell(r.support_cov),
            opt_cell(r.contradict_cov),
            r.raw_count.to_string(),
            r.proportion.to_string(),
            r.correct.to_string(),
        ])?;
    }
    w.flush()
}

pub fn read_csv(path: &Path) -> Result<Vec<CoverageRecord>, String> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| e.to_string())?;
    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| e.to_string())?;
        let line = i + 2;
        let cell = |c: usize| row.get(c).unwrap_or_default();
        let num = |c: usize| -> Result<Option<f64>, String> {
            let s = cell(c);
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|e| format!("line {line}: {e}"))
            }
        };
        out.push(CoverageRecord {
            instance_id: cell(0).to_string(),
            matcher: cell(1).parse().map_err(|e| format!("line {line}: {e}"))?,
            support_cov: num(2)?,
            contradict_cov: num(3)?,
            raw_count: cell(4).parse().map_err(|e| format!("line {line}: {e}"))?,
            proportion: num(5)?.ok_or_else(|| format!("line {line}: empty proportion"))?,
            correct: cell(6).parse().map_err(|e| format!("line {line}: {e}"))?,
        });
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(items: &[T], path: &Path) -> std::io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for item in items {
        serde_json::to_writer(&mut out, item)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, String> {
    let file = File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| e.to_string())?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| format!("{}:{}: {e}", path.display(), i + 1))?,
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::featmodel::Feature;
    use crate::llm::Provenance;

    fn feat(s: &str, c: f64) -> Feature {
        Feature {
            feature: s.into(),
            index: 0,
            contribution: c,
        }
    }

    fn fs(id: &str, sup: &[&str], con: &[&str]) -> FeatureSet {
        FeatureSet {
            instance_id: id.into(),
            class: "pos".into(),
            k: 5,
            supporting: sup.iter().map(|s| feat(s, 1.0)).collect(),
            contradicting: con.iter().map(|s| feat(s, -1.0)).collect(),
        }
    }

    fn rec(id: &str, label: Option<&str>, rationale: &str) -> LlmRecord {
        LlmRecord {
            id: id.into(),
            predicted_label: label.map(str::to_string),
            rationale: rationale.into(),
            raw_response: rationale.into(),
            provenance: Provenance::Replay,
            parse_error: label.is_none().then(|| "unparsed".to_string()),
        }
    }

    #[test]
    fn direct_count() {
        let r = coverage(
            &fs("1", &["great", "fun"], &["boring"]),
            "the film was great",
            Matcher::Exact,
            &EditPolicy::default(),
            true,
        );
        assert_eq!(r.support_cov, Some(0.5));
        assert_eq!(r.contradict_cov, Some(0.0));
        assert_eq!(r.raw_count, 1);
        assert_eq!(r.proportion, 0.2);
    }

    #[test]
    fn empty_subset_is_absent() {
        let r = coverage(
            &fs("1", &[], &["bad"]),
            "bad ending",
            Matcher::Token,
            &EditPolicy::default(),
            false,
        );
        assert_eq!(r.support_cov, None);
        assert_eq!(r.contradict_cov, Some(1.0));
        let r = coverage(
            &fs("1", &[], &[]),
            "anything",
            Matcher::Edit,
            &EditPolicy::default(),
            false,
        );
        assert_eq!(
            (r.support_cov, r.contradict_cov, r.raw_count),
            (None, None, 0)
        );
    }

    #[test]
    fn batch_shapes_and_skips() {
        let sets = [
            fs("b", &["great"], &["dull"]),
            fs("a", &["fun"], &[]),
            fs("c", &["x"], &[]),
        ];
        let recs = [
            rec("a", Some("pos"), "so much fun"),
            rec("b", Some("neg"), "dull"),
        ];
        let gold: HashMap<String, String> = [("a", "pos"), ("b", "pos"), ("c", "pos")]
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        for exec in [Execution::Sequential, Execution::Parallel] {
            let out = batch_coverage(
                &sets,
                &recs,
                &gold,
                &Matcher::ALL,
                &EditPolicy::default(),
                exec,
                true,
            );
            assert_eq!(out.records.len(), 6);
            assert_eq!(out.skipped, ["c"]);
            let keys: Vec<(&str, Matcher)> = out
                .records
                .iter()
                .map(|r| (r.instance_id.as_str(), r.matcher))
                .collect();
            assert_eq!(keys[0], ("a", Matcher::Token));
            assert_eq!(keys[5], ("b", Matcher::Edit));
            assert!(out.records[0].correct);
            assert!(!out.records[3].correct);
            assert_eq!(out.audit.len(), 3 * 3);
        }
    }

    #[test]
    fn parse_failures_are_counted_not_scored() {
        let sets = [fs("a", &["fun"], &[])];
        let recs = [rec("a", None, "")];
        let gold: HashMap<String, String> = [("a".to_string(), "pos".to_string())].into();
        let out = batch_coverage(
            &sets,
            &recs,
            &gold,
            &[Matcher::Token],
            &EditPolicy::default(),
            Execution::Sequential,
            false,
        );
        assert!(out.records.is_empty());
        assert_eq!(out.parse_failures, ["a"]);
    }

    #[test]
    fn csv_round_trip() {
        let records = vec![
            coverage(
                &fs("1", &["great", "fun"], &["boring"]),
                "great",
                Matcher::Exact,
                &EditPolicy::default(),
                true,
            ),
            coverage(
                &fs("2", &[], &["bad"]),
                "bad",
                Matcher::Edit,
                &EditPolicy::default(),
                false,
            ),
        ];
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.csv");
        write_csv(&records, &p).unwrap();
        assert_eq!(read_csv(&p).unwrap(), records);
        let p = dir.path().join("c.jsonl");
        write_jsonl(&records, &p).unwrap();
        assert_eq!(read_jsonl::<CoverageRecord>(&p).unwrap(), records);
    }
}
