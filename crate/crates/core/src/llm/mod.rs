//! LLM predictions and rationales: prompting, a cached HTTP client, response
//! parsing, and replay files for offline runs.

mod client;
mod parse;
mod prompt;
mod replay;

pub use client::{
    annotate_live, cache_key, EndpointConfig, HttpResponse, HttpTransport, LlmClient,
    ResponseCache, TokenBucket, Transport, TransportError,
};
pub use parse::{match_label, parse_response, ParsedResponse};
pub use prompt::{build_prompt, PromptTemplate, DEFAULT_TEMPLATE};
pub use replay::replay_load;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Live,
    Cache,
    Replay,
}

/// The LLM's answer for one instance. `predicted_label` is `None` exactly
/// when the response could not be parsed; `parse_error` then says why.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LlmRecord {
    pub id: String,
    pub predicted_label: Option<String>,
    pub rationale: String,
    pub raw_response: String,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parse_error: Option<String>,
}

impl LlmRecord {
    pub fn from_raw(id: &str, raw: String, labels: &[String], provenance: Provenance) -> Self {
        match parse_response(&raw, labels) {
            Ok(p) => Self {
                id: id.to_string(),
                predicted_label: Some(p.label),
                rationale: p.rationale,
                raw_response: raw,
                provenance,
                parse_error: None,
            },
            Err(reason) => Self {
                id: id.to_string(),
                predicted_label: None,
                rationale: String::new(),
                raw_response: raw,
                provenance,
                parse_error: Some(reason),
            },
        }
    }

    pub fn is_parsed(&self) -> bool {
        self.predicted_label.is_some()
    }
}

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("prompt template: {0}")]
    Template(String),
    #[error("offline mode: no cached response for key {0}")]
    OfflineMiss(String),
    #[error("no endpoint configured and no cached response for key {0}")]
    NoEndpoint(String),
    #[error("network failure after {attempts} attempts: {last}")]
    Network { attempts: usize, last: String },
    #[error("rate limited after {attempts} attempts")]
    RateLimited { attempts: usize },
    #[error("endpoint returned status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("unexpected endpoint payload: {0}")]
    Payload(String),
    #[error("{path}:{line}: malformed replay record: {reason}")]
    Replay {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("cache I/O: {0}")]
    Io(#[from] std::io::Error),
}
