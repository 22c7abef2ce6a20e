use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use ratcov_core::featmodel::{LrConfig, VectorizerConfig};
use ratcov_core::llm::{EndpointConfig, PromptTemplate};
use ratcov_core::matching::{EditPolicy, Matcher};
use ratcov_core::stats::{DEFAULT_RESAMPLES, MIN_RESAMPLES};
use ratcov_core::textnorm::Stopwords;
use ratcov_core::Execution;

use crate::error::CliError;

/// Whole pipeline configuration, read from one TOML file. Relative paths are
/// resolved against the directory of that file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: DatasetSection,
    #[serde(default)]
    pub split: SplitSection,
    #[serde(default)]
    pub vectorizer: VectorizerSection,
    #[serde(default)]
    pub model: LrConfig,
    #[serde(default)]
    pub features: FeaturesSection,
    #[serde(default)]
    pub matching: MatchingSection,
    #[serde(default)]
    pub llm: LlmSection,
    #[serde(default)]
    pub bootstrap: BootstrapSection,
    #[serde(default)]
    pub run: RunSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSection {
    pub path: PathBuf,
    /// Defaults to the file stem.
    pub name: Option<String>,
    /// One label per line; defaults to the sorted labels found in the data.
    pub labels: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSection {
    fn default() -> Self {
        Self {
            train_fraction: 0.8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VectorizerSection {
    pub ngram_range: (usize, usize),
    pub min_df: usize,
    /// `"builtin"`, `"none"` or a path to a word list.
    pub stopwords: String,
}

impl Default for VectorizerSection {
    fn default() -> Self {
        Self {
            ngram_range: (1, 2),
            min_df: 1,
            stopwords: "builtin".into(),
        }
    }
}

/// Which class's weight row explains an instance.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureClass {
    /// The reference model's own prediction.
    #[default]
    Lr,
    /// The LLM's predicted label.
    Llm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeaturesSection {
    pub k: usize,
    pub class: FeatureClass,
}

impl Default for FeaturesSection {
    fn default() -> Self {
        Self {
            k: 5,
            class: FeatureClass::Lr,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatchingSection {
    pub matchers: Vec<Matcher>,
    pub edit: EditPolicy,
    /// Write every matcher decision to `audit.jsonl`.
    pub audit: bool,
}

impl Default for MatchingSection {
    fn default() -> Self {
        Self {
            matchers: Matcher::ALL.to_vec(),
            edit: EditPolicy::default(),
            audit: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmSection {
    /// Recorded responses; makes the annotate stage fully offline.
    pub replay: Option<PathBuf>,
    pub endpoint: Option<EndpointConfig>,
    /// File holding the prompt template; the built-in template otherwise.
    pub template: Option<PathBuf>,
    pub instruction: Option<String>,
    /// Response cache; defaults to `<run dir>/cache`.
    pub cache_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BootstrapSection {
    pub n_resamples: usize,
    pub seed: u64,
}

impl Default for BootstrapSection {
    fn default() -> Self {
        Self {
            n_resamples: DEFAULT_RESAMPLES,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub execution: Execution,
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Reads, resolves relative paths and validates.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        resolve(base, &mut self.dataset.path);
        for p in [
            self.dataset.labels.as_mut(),
            self.llm.replay.as_mut(),
            self.llm.template.as_mut(),
            self.llm.cache_dir.as_mut(),
        ]
        .into_iter()
        .flatten()
        {
            resolve(base, p);
        }
        if !matches!(self.vectorizer.stopwords.as_str(), "builtin" | "none") {
            let mut p = PathBuf::from(&self.vectorizer.stopwords);
            resolve(base, &mut p);
            self.vectorizer.stopwords = p.display().to_string();
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.features.k == 0 {
            return bad("features.k must be at least 1".into());
        }
        if self.matching.matchers.is_empty() {
            return bad("matching.matchers must enable at least one matcher".into());
        }
        self.matching.edit.validate().map_err(CliError::Config)?;
        if self.bootstrap.n_resamples < MIN_RESAMPLES {
            return bad(format!(
                "bootstrap.n_resamples must be at least {MIN_RESAMPLES}, got {}",
                self.bootstrap.n_resamples
            ));
        }
        if !(self.split.train_fraction > 0.0 && self.split.train_fraction < 1.0) {
            return bad(format!(
                "split.train_fraction must lie in (0, 1), got {}",
                self.split.train_fraction
            ));
        }
        Ok(())
    }

    /// The annotate stage needs exactly one response source.
    pub fn check_llm_source(&self) -> Result<(), CliError> {
        match (&self.llm.replay, &self.llm.endpoint) {
            (Some(_), None) | (None, Some(_)) => Ok(()),
            (Some(_), Some(_)) => Err(CliError::Config(
                "set either llm.replay or llm.endpoint, not both".into(),
            )),
            (None, None) => Err(CliError::Config(
                "the annotate stage needs llm.replay or llm.endpoint".into(),
            )),
        }
    }

    pub fn dataset_name(&self) -> String {
        self.dataset.name.clone().unwrap_or_else(|| {
            self.dataset
                .path
                .file_stem()
                .map_or_else(|| "dataset".into(), |s| s.to_string_lossy().into_owned())
        })
    }

    pub fn stopwords(&self) -> Result<Stopwords, CliError> {
        match self.vectorizer.stopwords.as_str() {
            "builtin" => Ok(Stopwords::builtin()),
            "none" => Ok(Stopwords::none()),
            path => Stopwords::from_file(Path::new(path)).map_err(|e| CliError::Io {
                path: path.into(),
                source: e,
            }),
        }
    }

    pub fn vectorizer_config(&self, stopwords: &Stopwords) -> VectorizerConfig {
        VectorizerConfig {
            ngram_range: self.vectorizer.ngram_range,
            min_df: self.vectorizer.min_df,
            stopwords_id: stopwords.id().to_string(),
        }
    }

    pub fn prompt_template(&self) -> Result<PromptTemplate, CliError> {
        let mut t = match &self.llm.template {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
                    path: path.clone(),
                    source: e,
                })?;
                PromptTemplate::new(text)?
            }
            None => PromptTemplate::default(),
        };
        if let Some(i) = &self.llm.instruction {
            t.instruction = i.clone();
        }
        Ok(t)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = RunConfig::parse("[dataset]\npath = \"d.jsonl\"\n").unwrap();
        assert_eq!(cfg.features.k, 5);
        assert_eq!(cfg.matching.matchers, Matcher::ALL.to_vec());
        assert_eq!(cfg.bootstrap.n_resamples, DEFAULT_RESAMPLES);
        assert_eq!(cfg.dataset_name(), "d");
        cfg.validate().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        let cfg = RunConfig::parse("[dataset]\npath = \"d.jsonl\"\n[features]\nk = 0\n").unwrap();
        assert!(matches!(cfg.validate(), Err(CliError::Config(_))));
        let cfg =
            RunConfig::parse("[dataset]\npath = \"d.jsonl\"\n[bootstrap]\nn_resamples = 10\n")
                .unwrap();
        assert!(cfg.validate().is_err());
        assert!(RunConfig::parse("[dataset]\npath = \"d\"\n[extra]\n").is_err());
    }

    #[test]
    fn llm_source_is_exclusive() {
        let mut cfg = RunConfig::parse("[dataset]\npath = \"d.jsonl\"\n").unwrap();
        assert!(cfg.check_llm_source().is_err());
        cfg.llm.replay = Some("r.jsonl".into());
        cfg.check_llm_source().unwrap();
        cfg.llm.endpoint = Some(EndpointConfig::default());
        assert!(cfg.check_llm_source().is_err());
    }

    #[test]
    fn snapshot_round_trips() {
        let mut cfg =
            RunConfig::parse("[dataset]\npath = \"d.jsonl\"\n[llm]\nreplay = \"r.jsonl\"\n")
                .unwrap();
        cfg.resolve_paths(Path::new("/data"));
        assert_eq!(cfg.llm.replay.as_deref(), Some(Path::new("/data/r.jsonl")));
        assert_eq!(RunConfig::parse(&cfg.to_toml()).unwrap(), cfg);
    }
}
