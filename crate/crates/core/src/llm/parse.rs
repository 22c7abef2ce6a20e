use serde_json::Value;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedResponse {
    pub label: String,
    pub rationale: String,
}

/// Case-insensitive lookup in the label space; returns manifest casing.
pub fn match_label(candidate: &str, labels: &[String]) -> Option<String> {
    let c = candidate.trim().to_lowercase();
    labels.iter().find(|l| l.to_lowercase() == c).cloned()
}

fn structured(raw: &str, labels: &[String]) -> Option<ParsedResponse> {
    let mut candidates = vec![raw.trim()];
    if let (Some(s), Some(e)) = (raw.find('{'), raw.rfind('}')) {
        if s < e {
            candidates.push(&raw[s..=e]);
        }
    }
    for c in candidates {
        let Ok(Value::Object(obj)) = serde_json::from_str::<Value>(c) else {
            continue;
        };
        let (Some(Value::String(label)), Some(Value::String(rationale))) =
            (obj.get("label"), obj.get("rationale"))
        else {
            continue;
        };
        if let Some(label) = match_label(label, labels) {
            let rationale = rationale.trim().to_string();
            if !rationale.is_empty() {
                return Some(ParsedResponse { label, rationale });
            }
        }
    }
    None
}

fn is_word_char(c: Option<char>) -> bool {
    c.is_some_and(char::is_alphanumeric)
}

/// Earliest whole-word occurrence of any label; at equal positions the
/// longest label wins. Returns (label, byte start, byte end) in `raw`.
fn first_label(raw: &str, labels: &[String]) -> Option<(String, usize, usize)> {
    let mut sorted: Vec<&String> = labels.iter().filter(|l| !l.trim().is_empty()).collect();
    sorted.sort_by(|a, b| b.chars().count().cmp(&a.chars().count()).then(a.cmp(b)));
    let bounds: Vec<usize> = raw
        .char_indices()
        .map(|(i, _)| i)
        .chain(std::iter::once(raw.len()))
        .collect();
    for (ci, &start) in bounds[..bounds.len() - 1].iter().enumerate() {
        for label in &sorted {
            let n = label.chars().count();
            let Some(&end) = bounds.get(ci + n) else {
                continue;
            };
            let window = &raw[start..end];
            if window.to_lowercase() != label.to_lowercase() {
                continue;
            }
            let before = raw[..start].chars().next_back();
            let after = raw[end..].chars().next();
            if is_word_char(before) || is_word_char(after) {
                continue;
            }
            return Some(((*label).clone(), start, end));
        }
    }
    None
}

const TRIM_LEAD: &[char] = &['.', ':', ',', ';', '-', '"', '\'', ')', ']', '*'];

/// Parses a raw reply into (label, rationale).
///
/// First tries a JSON object with string fields `label` and `rationale`
/// (either the whole reply or the outermost `{...}` inside it). Otherwise
/// falls back to the first known label in the text and takes what follows it
/// as the rationale. Returns the failure reason when no in-space label and
/// non-empty rationale can be recovered.
pub fn parse_response(raw: &str, labels: &[String]) -> Result<ParsedResponse, String> {
    if let Some(p) = structured(raw, labels) {
        return Ok(p);
    }
    let Some((label, start, end)) = first_label(raw, labels) else {
        return Err("no known label found in response".into());
    };
    let after = raw[end..]
        .trim_start_matches(|c: char| c.is_whitespace() || TRIM_LEAD.contains(&c))
        .trim_end();
    let rationale = if after.is_empty() {
        raw[..start].trim()
    } else {
        after
    };
    if rationale.is_empty() {
        return Err("label found but no rationale text".into());
    }
    Ok(ParsedResponse {
        label,
        rationale: rationale.to_string(),
    })
}
