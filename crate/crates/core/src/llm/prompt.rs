use serde::{Deserialize, Serialize};

use super::LlmError;
use crate::corpus::Instance;

pub const DEFAULT_TEMPLATE: &str = "Classify the following text into exactly one of these labels: {labels}.\n\nText: {text}\n\nReply with a JSON object of the form {\"label\": \"<one of the labels>\", \"rationale\": \"<a short explanation citing the words that support your decision>\"}.";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub template: String,
    /// Optional dataset-specific instruction placed before the template.
    #[serde(default)]
    pub instruction: String,
}

impl Default for PromptTemplate {
    fn default() -> Self {
        Self {
            template: DEFAULT_TEMPLATE.to_string(),
            instruction: String::new(),
        }
    }
}

impl PromptTemplate {
    pub fn new(template: impl Into<String>) -> Result<Self, LlmError> {
        let t = Self {
            template: template.into(),
            instruction: String::new(),
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        for ph in ["{text}", "{labels}"] {
            match self.template.matches(ph).count() {
                1 => {}
                0 => return Err(LlmError::Template(format!("missing placeholder {ph}"))),
                n => {
                    return Err(LlmError::Template(format!(
                        "placeholder {ph} appears {n} times"
                    )))
                }
            }
        }
        Ok(())
    }
}

/// Fills `{labels}` (comma-separated, manifest order) and `{text}`.
/// Substitution is positional, so braces inside the text are left alone.
pub fn build_prompt(
    template: &PromptTemplate,
    instance: &Instance,
    labels: &[String],
) -> Result<String, LlmError> {
    template.validate()?;
    let t = &template.template;
    let label_list = labels.join(", ");
    let (ti, li) = (t.find("{text}").unwrap(), t.find("{labels}").unwrap());
    let mut parts: [(usize, &str, &str); 2] = [
        (ti, "{text}", instance.text.as_str()),
        (li, "{labels}", label_list.as_str()),
    ];
    parts.sort_by_key(|p| p.0);
    let mut out = String::with_capacity(t.len() + instance.text.len() + label_list.len());
    if !template.instruction.is_empty() {
        out.push_str(&template.instruction);
        out.push_str("\n\n");
    }
    let mut cursor = 0;
    for (pos, ph, value) in parts {
        out.push_str(&t[cursor..pos]);
        out.push_str(value);
        cursor = pos + ph.len();
    }
    out.push_str(&t[cursor..]);
    Ok(out)
}
