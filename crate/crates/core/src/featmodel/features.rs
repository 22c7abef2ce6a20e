use serde::{Deserialize, Serialize};

use super::{LrWeights, SparseVector, Vocabulary};

/// One n-gram feature with its signed contribution `weight * tfidf`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Feature {
    pub feature: String,
    pub index: usize,
    pub contribution: f64,
}

/// Top-k features of one instance, split by the sign of their contribution
/// to the explained class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSet {
    pub instance_id: String,
    /// Class whose weight row the contributions come from.
    pub class: String,
    pub k: usize,
    pub supporting: Vec<Feature>,
    pub contradicting: Vec<Feature>,
}

impl FeatureSet {
    pub fn len(&self) -> usize {
        self.supporting.len() + self.contradicting.len()
    }

    pub fn is_empty(&self) -> bool {
        self.supporting.is_empty() && self.contradicting.is_empty()
    }
}

/// Ranks the features active in `x` by `|W[class, j] * x_j|` (ties: lower
/// index first), keeps the top `min(k, active)` and partitions them by sign.
/// Zero contributions belong to neither side.
pub fn top_features(
    model: &LrWeights,
    vocab: &Vocabulary,
    instance_id: &str,
    x: &SparseVector,
    class: usize,
    k: usize,
) -> FeatureSet {
    assert!(k >= 1, "k must be positive");
    assert!(class < model.n_classes(), "class index out of range");
    let mut contributions: Vec<(usize, f64)> = x
        .entries()
        .iter()
        .filter(|&&(j, _)| j < model.n_features)
        .map(|&(j, v)| (j, model.weight(class, j) * v))
        .collect();
    contributions.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then(a.0.cmp(&b.0)));
    contributions.truncate(k);

    let mut set = FeatureSet {
        instance_id: instance_id.to_string(),
        class: model.labels[class].clone(),
        k,
        supporting: Vec::new(),
        contradicting: Vec::new(),
    };
    for (j, c) in contributions {
        let f = Feature {
            feature: vocab.term(j).to_string(),
            index: j,
            contribution: c,
        };
        if c > 0.0 {
            set.supporting.push(f);
        } else if c < 0.0 {
            set.contradicting.push(f);
        }
    }
    set
}
