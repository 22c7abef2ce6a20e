//! Feature-model rationale coverage: corpus handling, text normalization,
//! a TF-IDF + logistic regression reference model, feature matching against
//! LLM rationales, coverage statistics and reporting.

pub mod corpus;
pub mod coverage;
pub mod exec;
pub mod featmodel;
pub mod llm;
pub mod matching;
pub mod report;
pub mod stats;
pub mod textnorm;

pub use exec::Execution;
