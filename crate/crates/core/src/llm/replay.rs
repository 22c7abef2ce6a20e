use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::Deserialize;

use super::{match_label, LlmError, LlmRecord, Provenance};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ReplayLine {
    id: serde_json::Value,
    label: Option<String>,
    rationale: Option<String>,
    raw: Option<String>,
}

/// Loads a replay file. Each line is either `{"id", "label", "rationale"}`
/// or `{"id", "raw"}`; raw lines go through the response parser.
/// Structured lines whose label is outside the label space become
/// parse-failure records.
pub fn replay_load(path: &Path, labels: &[String]) -> Result<Vec<LlmRecord>, LlmError> {
    let bad = |line: usize, reason: String| LlmError::Replay {
        path: path.display().to_string(),
        line,
        reason,
    };
    let file = File::open(path).map_err(|e| bad(0, e.to_string()))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| bad(lineno, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: ReplayLine =
            serde_json::from_str(&line).map_err(|e| bad(lineno, e.to_string()))?;
        let id = match rec.id {
            serde_json::Value::String(s) => s,
            serde_json::Value::Number(n) => n.to_string(),
            _ => return Err(bad(lineno, "id must be a string or number".into())),
        };
        let record = match (rec.label, rec.rationale, rec.raw) {
            (Some(label), Some(rationale), None) => {
                let rationale = rationale.trim().to_string();
                match match_label(&label, labels) {
                    Some(l) if !rationale.is_empty() => LlmRecord {
                        id,
                        predicted_label: Some(l),
                        rationale,
                        raw_response: line.clone(),
                        provenance: Provenance::Replay,
                        parse_error: None,
                    },
                    Some(_) => LlmRecord {
                        id,
                        predicted_label: None,
                        rationale: String::new(),
                        raw_response: line.clone(),
                        provenance: Provenance::Replay,
                        parse_error: Some("empty rationale".into()),
                    },
                    None => LlmRecord {
                        id,
                        predicted_label: None,
                        rationale: String::new(),
                        raw_response: line.clone(),
                        provenance: Provenance::Replay,
                        parse_error: Some(format!("label {label:?} not in label space")),
                    },
                }
            }
            (None, None, Some(raw)) => LlmRecord::from_raw(&id, raw, labels, Provenance::Replay),
            _ => return Err(bad(lineno, "expected either label+rationale or raw".into())),
        };
        out.push(record);
    }
    Ok(out)
}
