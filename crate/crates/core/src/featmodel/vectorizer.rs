use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::FeatError;
use crate::textnorm::{normalize, Stopwords};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorizerConfig {
    /// Inclusive n-gram range; only 1..=2 is supported.
    pub ngram_range: (usize, usize),
    pub min_df: usize,
    pub stopwords_id: String,
}

impl Default for VectorizerConfig {
    fn default() -> Self {
        Self {
            ngram_range: (1, 2),
            min_df: 1,
            stopwords_id: crate::textnorm::BUILTIN_STOPWORDS_ID.to_string(),
        }
    }
}

/// Fitted TF-IDF vocabulary over lemma n-grams.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    /// n-gram strings in index order; bigrams are two lemmas joined by a space.
    terms: Vec<String>,
    idf: Vec<f64>,
    /// Lemmatized stopwords in effect at fit time.
    stopwords: Vec<String>,
    config: VectorizerConfig,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

/// Sparse vector with strictly increasing indices and positive values.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    entries: Vec<(usize, f64)>,
}

impl SparseVector {
    /// Builds from arbitrary pairs: zero values dropped, sorted by index.
    /// Panics on duplicate indices or negative/non-finite values.
    pub fn from_pairs(mut entries: Vec<(usize, f64)>) -> Self {
        entries.retain(|&(_, v)| v != 0.0);
        entries.sort_by_key(|&(i, _)| i);
        for w in entries.windows(2) {
            assert!(w[0].0 < w[1].0, "duplicate index {}", w[0].0);
        }
        assert!(
            entries.iter().all(|&(_, v)| v.is_finite() && v > 0.0),
            "sparse values must be finite and positive"
        );
        Self { entries }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, index: usize) -> f64 {
        self.entries
            .binary_search_by_key(&index, |&(i, _)| i)
            .map(|p| self.entries[p].1)
            .unwrap_or(0.0)
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|(_, v)| v * v).sum::<f64>().sqrt()
    }

    /// One past the largest index, or 0 for the zero vector.
    pub fn dim_bound(&self) -> usize {
        self.entries.last().map_or(0, |&(i, _)| i + 1)
    }
}

/// Unigram and bigram strings of one document, in document order.
/// Unigrams that are stopwords are dropped; a bigram is dropped only when
/// both of its lemmas are stopwords.
fn ngrams(text: &str, stopwords: &Stopwords, range: (usize, usize)) -> Vec<String> {
    let lemmas = normalize(text).lemmas;
    let mut out = Vec::new();
    if range.0 <= 1 && range.1 >= 1 {
        out.extend(lemmas.iter().filter(|l| !stopwords.contains(l)).cloned());
    }
    if range.0 <= 2 && range.1 >= 2 {
        for pair in lemmas.windows(2) {
            if !(stopwords.contains(&pair[0]) && stopwords.contains(&pair[1])) {
                out.push(format!("{} {}", pair[0], pair[1]));
            }
        }
    }
    out
}

impl Vocabulary {
    /// Fits the vocabulary: every n-gram with document frequency >= `min_df`,
    /// indexed in lexicographic order, with smoothed idf
    /// `ln((1 + N) / (1 + df)) + 1`.
    pub fn fit<'a>(
        docs: impl IntoIterator<Item = &'a str>,
        stopwords: &Stopwords,
        config: VectorizerConfig,
    ) -> Result<Self, FeatError> {
        let (lo, hi) = config.ngram_range;
        if lo == 0 || lo > hi || hi > 2 {
            return Err(FeatError::Config(format!(
                "unsupported n-gram range ({lo}, {hi}); expected within (1, 2)"
            )));
        }
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        let mut n_docs = 0usize;
        for doc in docs {
            n_docs += 1;
            let mut grams = ngrams(doc, stopwords, config.ngram_range);
            grams.sort();
            grams.dedup();
            for g in grams {
                *df.entry(g).or_default() += 1;
            }
        }
        if n_docs == 0 {
            return Err(FeatError::EmptyTrainingSet);
        }
        let min_df = config.min_df.max(1);
        let (terms, idf): (Vec<String>, Vec<f64>) = df
            .into_iter()
            .filter(|&(_, d)| d >= min_df)
            .map(|(t, d)| {
                let idf = ((1.0 + n_docs as f64) / (1.0 + d as f64)).ln() + 1.0;
                (t, idf)
            })
            .unzip();
        if terms.is_empty() {
            return Err(FeatError::EmptyVocabulary);
        }
        let mut config = config;
        config.stopwords_id = stopwords.id().to_string();
        Ok(Self::from_parts(
            terms,
            idf,
            stopwords.sorted_words(),
            config,
        ))
    }

    pub(crate) fn from_parts(
        terms: Vec<String>,
        idf: Vec<f64>,
        stopwords: Vec<String>,
        config: VectorizerConfig,
    ) -> Self {
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Self {
            terms,
            idf,
            stopwords,
            config,
            index,
        }
    }

    /// Rebuilds the lookup table after deserialization.
    pub(crate) fn reindex(&mut self) {
        self.index = self
            .terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn term(&self, index: usize) -> &str {
        &self.terms[index]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn idf(&self, index: usize) -> f64 {
        self.idf[index]
    }

    pub fn idfs(&self) -> &[f64] {
        &self.idf
    }

    pub fn config(&self) -> &VectorizerConfig {
        &self.config
    }

    pub fn stopwords(&self) -> Stopwords {
        Stopwords::from_words(
            &self.config.stopwords_id,
            self.stopwords.iter().map(String::as_str),
        )
    }

    /// TF-IDF vector of `text`: raw counts times idf, L2-normalized.
    /// Out-of-vocabulary n-grams are ignored.
    pub fn transform(&self, text: &str) -> SparseVector {
        self.transform_with(text, &self.stopwords())
    }

    pub(crate) fn transform_with(&self, text: &str, stopwords: &Stopwords) -> SparseVector {
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for g in ngrams(text, stopwords, self.config.ngram_range) {
            if let Some(i) = self.index_of(&g) {
                *counts.entry(i).or_default() += 1.0;
            }
        }
        let mut entries: Vec<(usize, f64)> = counts
            .into_iter()
            .map(|(i, c)| (i, c * self.idf[i]))
            .collect();
        let norm = entries.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for e in &mut entries {
                e.1 /= norm;
            }
        }
        SparseVector { entries }
    }

    /// Transforms many documents, reusing one stopword set.
    pub fn transform_all<'a>(&self, docs: impl IntoIterator<Item = &'a str>) -> Vec<SparseVector> {
        let sw = self.stopwords();
        docs.into_iter()
            .map(|d| self.transform_with(d, &sw))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plain() -> VectorizerConfig {
        VectorizerConfig {
            min_df: 1,
            ..VectorizerConfig::default()
        }
    }

    #[test]
    fn two_doc_vocabulary_and_idf() {
        let v = Vocabulary::fit(["a b", "b c"], &Stopwords::none(), plain()).unwrap();
        assert_eq!(v.terms(), ["a", "a b", "b", "b c", "c"]);
        let b = v.index_of("b").unwrap();
        assert!((v.idf(b) - 1.0).abs() < 1e-12);
        let a = v.index_of("a").unwrap();
        assert!((v.idf(a) - ((3.0f64 / 2.0).ln() + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn repeated_doc_idf_is_one() {
        let v = Vocabulary::fit(["x", "x"], &Stopwords::none(), plain()).unwrap();
        assert_eq!(v.terms(), ["x"]);
        assert_eq!(v.idf(0), 1.0);
    }

    #[test]
    fn all_stopwords_is_empty_vocabulary() {
        let err = Vocabulary::fit(["the and of", "it is a"], &Stopwords::builtin(), plain());
        assert!(matches!(err, Err(FeatError::EmptyVocabulary)));
    }

    #[test]
    fn stopword_bigram_rule() {
        let v = Vocabulary::fit(["not good at all"], &Stopwords::builtin(), plain()).unwrap();
        // "not" alone is a stopword, "not good" survives, "at all" does not
        assert_eq!(v.terms(), ["good", "good at", "not good"]);
    }

    #[test]
    fn min_df_filters() {
        let cfg = VectorizerConfig {
            min_df: 2,
            ..plain()
        };
        let v = Vocabulary::fit(["a b", "b c"], &Stopwords::none(), cfg).unwrap();
        assert_eq!(v.terms(), ["b"]);
    }

    #[test]
    fn transform_normalizes() {
        let v = Vocabulary::fit(
            ["a b", "b c"],
            &Stopwords::none(),
            VectorizerConfig {
                ngram_range: (1, 1),
                ..plain()
            },
        )
        .unwrap();
        let x = v.transform("b");
        assert_eq!(x.entries(), [(v.index_of("b").unwrap(), 1.0)]);
        assert!(v.transform("").is_zero());
        assert!(v.transform("zzz qqq").is_zero());

        // "a" and "c" share idf; counts 1 and 1
        let x = v.transform("a c");
        let h = 1.0 / 2f64.sqrt();
        for &(_, val) in x.entries() {
            assert!((val - h).abs() < 1e-12);
        }
        assert!((x.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bad_ngram_range() {
        let cfg = VectorizerConfig {
            ngram_range: (1, 3),
            ..plain()
        };
        assert!(matches!(
            Vocabulary::fit(["a"], &Stopwords::none(), cfg),
            Err(FeatError::Config(_))
        ));
    }
}
