//! The three feature-in-rationale matchers.
//!
//! * token: the feature's lemma sequence occurs as a contiguous run of the
//!   rationale's lemmas.
//! * exact: case-folded substring of the raw rationale.
//! * edit: some lemma window of the same length lies within a
//!   length-dependent Levenshtein budget of the feature.
//!
//! Edit matching runs over lemmas, so a token match is always an edit match
//! at distance 0.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::textnorm::{lemma_sequence, NormalizedText};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Matcher {
    Token,
    Exact,
    Edit,
}

impl Matcher {
    pub const ALL: [Matcher; 3] = [Matcher::Token, Matcher::Exact, Matcher::Edit];

    pub fn as_str(self) -> &'static str {
        match self {
            Matcher::Token => "token",
            Matcher::Exact => "exact",
            Matcher::Edit => "edit",
        }
    }
}

impl fmt::Display for Matcher {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Matcher {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "token" => Ok(Matcher::Token),
            "exact" => Ok(Matcher::Exact),
            "edit" => Ok(Matcher::Edit),
            other => Err(format!(
                "unknown matcher {other:?} (expected token, exact or edit)"
            )),
        }
    }
}

/// Length-dependent edit budget:
/// `len < short_below` -> 0, `len <= mid_up_to` -> `mid_budget`,
/// otherwise `floor(long_ratio * len)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EditPolicy {
    pub short_below: usize,
    pub mid_up_to: usize,
    pub mid_budget: usize,
    pub long_ratio: f64,
}

impl Default for EditPolicy {
    fn default() -> Self {
        Self {
            short_below: 4,
            mid_up_to: 7,
            mid_budget: 1,
            long_ratio: 0.25,
        }
    }
}

impl EditPolicy {
    pub fn threshold(&self, len: usize) -> usize {
        if len < self.short_below {
            0
        } else if len <= self.mid_up_to {
            self.mid_budget
        } else {
            (self.long_ratio * len as f64).floor() as usize
        }
    }

    /// Checks that the schedule is non-decreasing and stays below the length.
    pub fn validate(&self) -> Result<(), String> {
        if !(self.long_ratio >= 0.0 && self.long_ratio < 1.0) {
            return Err(format!("long_ratio {} must lie in [0, 1)", self.long_ratio));
        }
        if self.short_below > self.mid_up_to + 1 {
            return Err("short_below must not exceed mid_up_to + 1".into());
        }
        let horizon = self.mid_up_to.max(self.short_below) + 64;
        let mut prev = 0;
        for len in 1..=horizon {
            let d = self.threshold(len);
            if d < prev {
                return Err(format!("threshold decreases at length {len}"));
            }
            if d >= len {
                return Err(format!("threshold {d} is not below length {len}"));
            }
            prev = d;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchResult {
    pub feature: String,
    pub matcher: Matcher,
    pub matched: bool,
    /// Byte span of the matched text in the rationale.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evidence: Option<(usize, usize)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distance: Option<usize>,
}

impl MatchResult {
    fn miss(feature: &str, matcher: Matcher) -> Self {
        Self {
            feature: feature.to_string(),
            matcher,
            matched: false,
            evidence: None,
            distance: None,
        }
    }
}

/// Unit-cost Levenshtein distance over Unicode scalar values.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    levenshtein_chars(&a, &b)
}

fn levenshtein_chars(a: &[char], b: &[char]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let cost = usize::from(ca != cb);
            cur[j + 1] = (cur[j] + 1).min(prev[j + 1] + 1).min(prev[j] + cost);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub fn match_token(feature: &str, rationale: &NormalizedText) -> MatchResult {
    let needle = lemma_sequence(feature);
    if needle.is_empty() || needle.len() > rationale.lemmas.len() {
        return MatchResult::miss(feature, Matcher::Token);
    }
    match rationale
        .lemmas
        .windows(needle.len())
        .position(|w| w == needle.as_slice())
    {
        Some(start) => MatchResult {
            feature: feature.to_string(),
            matcher: Matcher::Token,
            matched: true,
            evidence: Some(rationale.span_of(start..start + needle.len())),
            distance: None,
        },
        None => MatchResult::miss(feature, Matcher::Token),
    }
}

/// Lowercases `s` char by char, remembering for every lowercase char the
/// byte range of the source char it came from and whether it starts or ends
/// that char's expansion.
struct Folded {
    chars: Vec<char>,
    origin: Vec<(usize, usize)>,
    starts: Vec<bool>,
    ends: Vec<bool>,
}

fn fold(s: &str) -> Folded {
    let mut f = Folded {
        chars: Vec::with_capacity(s.len()),
        origin: Vec::with_capacity(s.len()),
        starts: Vec::with_capacity(s.len()),
        ends: Vec::with_capacity(s.len()),
    };
    for (pos, c) in s.char_indices() {
        let span = (pos, pos + c.len_utf8());
        let lower: Vec<char> = c.to_lowercase().collect();
        let n = lower.len();
        for (k, lc) in lower.into_iter().enumerate() {
            f.chars.push(lc);
            f.origin.push(span);
            f.starts.push(k == 0);
            f.ends.push(k + 1 == n);
        }
    }
    f
}

pub fn match_exact(feature: &str, rationale_raw: &str) -> MatchResult {
    let needle: Vec<char> = feature.chars().flat_map(char::to_lowercase).collect();
    let hay = fold(rationale_raw);
    if needle.is_empty() || needle.len() > hay.chars.len() {
        return MatchResult::miss(feature, Matcher::Exact);
    }
    let n = needle.len();
    for start in 0..=hay.chars.len() - n {
        let end = start + n - 1;
        if hay.starts[start] && hay.ends[end] && hay.chars[start..=end] == needle[..] {
            return MatchResult {
                feature: feature.to_string(),
                matcher: Matcher::Exact,
                matched: true,
                evidence: Some((hay.origin[start].0, hay.origin[end].1)),
                distance: None,
            };
        }
    }
    MatchResult::miss(feature, Matcher::Exact)
}

pub fn match_edit(feature: &str, rationale: &NormalizedText, policy: &EditPolicy) -> MatchResult {
    let lemmas = lemma_sequence(feature);
    let n = lemmas.len();
    if n == 0 || n > rationale.lemmas.len() {
        return MatchResult::miss(feature, Matcher::Edit);
    }
    let target: Vec<char> = lemmas.join(" ").chars().collect();
    let budget = policy.threshold(feature.trim().chars().count());
    let mut best: Option<(usize, usize)> = None;
    for (start, window) in rationale.lemmas.windows(n).enumerate() {
        let candidate: Vec<char> = window.join(" ").chars().collect();
        // length difference is a lower bound on the distance
        if candidate.len().abs_diff(target.len()) > budget {
            continue;
        }
        let d = levenshtein_chars(&target, &candidate);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((start, d));
            if d == 0 {
                break;
            }
        }
    }
    match best {
        Some((start, d)) if d <= budget => MatchResult {
            feature: feature.to_string(),
            matcher: Matcher::Edit,
            matched: true,
            evidence: Some(rationale.span_of(start..start + n)),
            distance: Some(d),
        },
        _ => MatchResult::miss(feature, Matcher::Edit),
    }
}

/// Dispatches to the selected matcher.
pub fn match_feature(
    matcher: Matcher,
    feature: &str,
    rationale: &NormalizedText,
    policy: &EditPolicy,
) -> MatchResult {
    match matcher {
        Matcher::Token => match_token(feature, rationale),
        Matcher::Exact => match_exact(feature, &rationale.source),
        Matcher::Edit => match_edit(feature, rationale, policy),
    }
}
