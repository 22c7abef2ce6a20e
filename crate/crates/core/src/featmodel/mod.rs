//! The transparent reference model: TF-IDF over lemma 1-2 grams, multinomial
//! logistic regression, and per-instance top-k feature extraction.

mod archive;
mod features;
mod lr;
mod vectorizer;

pub use archive::{ModelArchive, MODEL_FORMAT};
pub use features::{top_features, Feature, FeatureSet};
pub use lr::{argmax, softmax, train_lr, LrConfig, LrWeights, Objective, TrainTrace};
pub use vectorizer::{SparseVector, VectorizerConfig, Vocabulary};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FeatError {
    #[error("vocabulary is empty after stopword and min_df filtering")]
    EmptyVocabulary,
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("class {0:?} has no training examples")]
    MissingClass(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("training produced non-finite weights")]
    NonFinite,
    #[error("model archive: {0}")]
    Archive(String),
    #[error("model archive I/O: {0}")]
    Io(#[from] std::io::Error),
}
