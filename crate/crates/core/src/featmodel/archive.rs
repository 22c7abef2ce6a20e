use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    train_lr, FeatError, LrConfig, LrWeights, SparseVector, TrainTrace, VectorizerConfig,
    Vocabulary,
};
use crate::corpus::Dataset;
use crate::textnorm::Stopwords;

pub const MODEL_FORMAT: &str = "ratcov-model/1";

/// Everything needed to vectorize new text and explain predictions:
/// vocabulary, idf, weights, intercepts, class order and configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArchive {
    pub format: String,
    pub vocabulary: Vocabulary,
    pub model: LrWeights,
}

impl ModelArchive {
    /// Fits the vectorizer on `train` and trains the classifier on its output.
    /// The class order is the dataset's label order.
    pub fn train(
        train: &Dataset,
        stopwords: &Stopwords,
        vectorizer: VectorizerConfig,
        lr: &LrConfig,
    ) -> Result<(Self, TrainTrace), FeatError> {
        let texts = || train.instances().iter().map(|i| i.text.as_str());
        let vocabulary = Vocabulary::fit(texts(), stopwords, vectorizer)?;
        let x = vocabulary.transform_all(texts());
        let labels = train.labels();
        let y: Vec<usize> = train
            .instances()
            .iter()
            .map(|i| {
                labels
                    .iter()
                    .position(|l| *l == i.gold_label)
                    .expect("dataset invariant: gold label in label space")
            })
            .collect();
        let (model, trace) = train_lr(&x, &y, labels, vocabulary.len(), lr)?;
        Ok((
            Self {
                format: MODEL_FORMAT.to_string(),
                vocabulary,
                model,
            },
            trace,
        ))
    }

    pub fn transform(&self, text: &str) -> SparseVector {
        self.vocabulary.transform(text)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(self).expect("archive serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, FeatError> {
        let mut archive: Self =
            serde_json::from_str(text).map_err(|e| FeatError::Archive(e.to_string()))?;
        if archive.format != MODEL_FORMAT {
            return Err(FeatError::Archive(format!(
                "unsupported format tag {:?} (expected {MODEL_FORMAT:?})",
                archive.format
            )));
        }
        archive.vocabulary.reindex();
        let m = &archive.model;
        let vocab = &archive.vocabulary;
        if m.n_features != vocab.len()
            || m.weights.len() != m.labels.len() * m.n_features
            || m.intercepts.len() != m.labels.len()
            || vocab.idfs().len() != vocab.len()
        {
            return Err(FeatError::Archive("inconsistent dimensions".into()));
        }
        Ok(archive)
    }

    pub fn save(&self, path: &Path) -> Result<(), FeatError> {
        fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, FeatError> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}
