//! Tokenization, lemma reduction and stopwords.
//!
//! Every component that looks at words (the vectorizer and all three matchers)
//! goes through [`normalize`], so a feature string produced by the vectorizer
//! and a rationale are always reduced the same way.
//!
//! The lemmatizer is a small inflectional suffix stripper in the spirit of the
//! first step of the Porter stemmer, plus an exception table for irregular
//! forms. Rules are applied until a fixpoint, which makes [`lemmatize`]
//! idempotent.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::ops::Range;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

/// Identifier of the embedded stopword list. Bumped whenever the list changes.
pub const BUILTIN_STOPWORDS_ID: &str = "en-builtin-v1";

/// A tokenized and lemmatized string.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizedText {
    pub source: String,
    pub tokens: Vec<String>,
    pub lemmas: Vec<String>,
    /// UTF-8 byte span of every token in `source`.
    pub offsets: Vec<(usize, usize)>,
}

impl NormalizedText {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Byte span covering tokens `range.start..range.end`.
    pub fn span_of(&self, range: Range<usize>) -> (usize, usize) {
        (self.offsets[range.start].0, self.offsets[range.end - 1].1)
    }
}

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

/// Splits `text` into maximal runs of letters and digits. An apostrophe is
/// kept when it sits between two alphanumeric characters ("don't").
pub fn tokenize(text: &str) -> Vec<(String, (usize, usize))> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if !chars[i].1.is_alphanumeric() {
            i += 1;
            continue;
        }
        let start = chars[i].0;
        let mut j = i + 1;
        while j < chars.len() {
            let c = chars[j].1;
            if c.is_alphanumeric() {
                j += 1;
            } else if is_apostrophe(c) && j + 1 < chars.len() && chars[j + 1].1.is_alphanumeric() {
                j += 2;
            } else {
                break;
            }
        }
        let end = if j < chars.len() {
            chars[j].0
        } else {
            text.len()
        };
        out.push((text[start..end].to_string(), (start, end)));
        i = j;
    }
    out
}

const VOWELS: &[char] = &['a', 'e', 'i', 'o', 'u'];

// Irregular forms. Every value must itself be a fixpoint of `lemmatize`;
// a unit test enforces that.
const EXCEPTIONS: &[(&str, &str)] = &[
    ("am", "be"),
    ("is", "be"),
    ("are", "be"),
    ("was", "be"),
    ("were", "be"),
    ("been", "be"),
    ("being", "be"),
    ("has", "have"),
    ("had", "have"),
    ("having", "have"),
    ("does", "do"),
    ("did", "do"),
    ("doing", "do"),
    ("done", "do"),
    ("goes", "go"),
    ("went", "go"),
    ("gone", "go"),
    ("going", "go"),
    ("made", "make"),
    ("said", "say"),
    ("says", "say"),
    ("saw", "see"),
    ("seen", "see"),
    ("took", "take"),
    ("taken", "take"),
    ("gave", "give"),
    ("given", "give"),
    ("came", "come"),
    ("got", "get"),
    ("gotten", "get"),
    ("felt", "feel"),
    ("found", "find"),
    ("thought", "think"),
    ("told", "tell"),
    ("left", "left"),
    ("used", "use"),
    ("children", "child"),
    ("men", "man"),
    ("women", "woman"),
    ("feet", "foot"),
    ("teeth", "tooth"),
    ("mice", "mouse"),
    ("geese", "goose"),
    ("better", "better"),
    ("best", "best"),
    ("news", "news"),
    ("series", "series"),
    ("species", "species"),
    ("always", "always"),
    ("perhaps", "perhaps"),
    ("sometimes", "sometimes"),
    ("nothing", "nothing"),
    ("something", "something"),
    ("anything", "anything"),
    ("everything", "everything"),
    ("morning", "morning"),
    ("evening", "evening"),
    ("during", "during"),
    ("ceiling", "ceiling"),
    ("thing", "thing"),
    ("wing", "wing"),
    ("spring", "spring"),
    ("string", "string"),
    ("boring", "boring"),
    ("amazing", "amazing"),
    ("interesting", "interesting"),
    ("exciting", "exciting"),
    ("stunning", "stunning"),
    ("disappointing", "disappointing"),
    ("charming", "charming"),
    ("annoying", "annoying"),
    ("confusing", "confusing"),
    ("entertaining", "entertaining"),
    ("tired", "tired"),
    ("bored", "bored"),
    ("needed", "need"),
    ("seed", "seed"),
    ("speed", "speed"),
];

// Nouns ending in "ie" whose plural must not be rewritten to "-y".
const IE_NOUNS: &[&str] = &[
    "movie", "cookie", "zombie", "rookie", "hippie", "selfie", "calorie", "genie", "prairie",
    "goalie", "newbie", "brownie", "sweetie", "auntie", "freebie", "hoodie", "veggie", "indie",
    "smoothie", "birdie", "pie", "tie", "lie", "die", "magpie", "necktie", "eerie", "techie",
    "foodie", "bookie", "collie", "yuppie", "groupie", "lingerie", "reverie", "specie",
];

fn exceptions() -> &'static HashMap<&'static str, &'static str> {
    static MAP: OnceLock<HashMap<&'static str, &'static str>> = OnceLock::new();
    MAP.get_or_init(|| EXCEPTIONS.iter().copied().collect())
}

fn ie_nouns() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| IE_NOUNS.iter().copied().collect())
}

fn is_consonant(word: &[char], i: usize) -> bool {
    match word[i] {
        c if VOWELS.contains(&c) => false,
        'y' => i == 0 || !is_consonant(word, i - 1),
        c => c.is_alphabetic(),
    }
}

/// Porter measure: the number of vowel-consonant sequences.
fn measure(word: &[char]) -> usize {
    let mut m = 0;
    let mut prev_vowel = false;
    for i in 0..word.len() {
        let cons = is_consonant(word, i);
        if cons && prev_vowel {
            m += 1;
        }
        prev_vowel = !cons;
    }
    m
}

fn has_vowel(word: &[char]) -> bool {
    (0..word.len()).any(|i| !is_consonant(word, i))
}

// consonant-vowel-consonant ending where the last consonant is not w, x or y
fn ends_cvc(word: &[char]) -> bool {
    let n = word.len();
    n >= 3
        && is_consonant(word, n - 3)
        && !is_consonant(word, n - 2)
        && is_consonant(word, n - 1)
        && !matches!(word[n - 1], 'w' | 'x' | 'y')
}

fn ends_double_consonant(word: &[char]) -> bool {
    let n = word.len();
    n >= 2 && word[n - 1] == word[n - 2] && is_consonant(word, n - 1)
}

/// Cleanup after removing "-ing"/"-ed": undouble ("runn" -> "run") or restore
/// a silent e ("mak" -> "make").
fn repair_stem(mut stem: Vec<char>) -> Vec<char> {
    if ends_double_consonant(&stem) && !matches!(stem[stem.len() - 1], 'l' | 's' | 'z') {
        stem.pop();
    } else if measure(&stem) == 1 && ends_cvc(&stem) {
        stem.push('e');
    }
    stem
}

fn strip(word: &[char], suffix: &str) -> Option<Vec<char>> {
    let suf: Vec<char> = suffix.chars().collect();
    if word.len() > suf.len() && word.ends_with(&suf) {
        Some(word[..word.len() - suf.len()].to_vec())
    } else {
        None
    }
}

/// One rewrite step. Every rule strictly shortens the word.
fn step(word: &[char]) -> Option<Vec<char>> {
    let s: String = word.iter().collect();
    if word.iter().any(|c| !c.is_alphabetic()) {
        return None;
    }
    if let Some(stem) = strip(word, "s") {
        let singular: String = stem.iter().collect();
        if s.ends_with("ies") && ie_nouns().contains(singular.as_str()) {
            return Some(stem);
        }
    }
    if word.len() >= 5 {
        if let Some(mut stem) = strip(word, "ies") {
            stem.push('y');
            return Some(stem);
        }
        if let Some(mut stem) = strip(word, "ied") {
            stem.push('y');
            return Some(stem);
        }
    }
    if let Some(mut stem) = strip(word, "sses") {
        stem.extend(['s', 's']);
        return Some(stem);
    }
    for suffix in ["xes", "ches", "shes", "zzes"] {
        if s.ends_with(suffix) && word.len() > suffix.len() + 1 {
            return strip(word, "es");
        }
    }
    if word.len() >= 4
        && s.ends_with('s')
        && !(s.ends_with("ss") || s.ends_with("us") || s.ends_with("is"))
    {
        return strip(word, "s");
    }
    if let Some(stem) = strip(word, "ing") {
        if stem.len() >= 3 && has_vowel(&stem) {
            return Some(repair_stem(stem));
        }
    }
    if !s.ends_with("eed") {
        if let Some(stem) = strip(word, "ed") {
            if stem.len() >= 3 && has_vowel(&stem) {
                return Some(repair_stem(stem));
            }
        }
    }
    if word.len() == 4 && s.ends_with("ied") {
        // "died" -> "die"
        return Some(word[..3].to_vec());
    }
    None
}

/// Reduces a token to its lemma: lowercase, apostrophes and possessive "'s"
/// removed, inflectional suffixes stripped.
pub fn lemmatize(token: &str) -> String {
    let lower: String = token.chars().flat_map(char::to_lowercase).collect();
    let lower = lower.replace('\u{2019}', "'");
    let lower = lower.strip_suffix("'s").unwrap_or(&lower);
    let mut word: Vec<char> = lower.chars().filter(|c| c.is_alphanumeric()).collect();
    loop {
        let s: String = word.iter().collect();
        if let Some(target) = exceptions().get(s.as_str()) {
            return (*target).to_string();
        }
        match step(&word) {
            Some(next) => word = next,
            None => return s,
        }
    }
}

/// Tokenizes and lemmatizes `text`.
pub fn normalize(text: &str) -> NormalizedText {
    let mut tokens = Vec::new();
    let mut lemmas = Vec::new();
    let mut offsets = Vec::new();
    for (tok, span) in tokenize(text) {
        let lemma = lemmatize(&tok);
        if lemma.is_empty() {
            continue;
        }
        lemmas.push(lemma);
        tokens.push(tok);
        offsets.push(span);
    }
    NormalizedText {
        source: text.to_string(),
        tokens,
        lemmas,
        offsets,
    }
}

/// Lemma sequence of a short phrase such as a feature string.
pub fn lemma_sequence(phrase: &str) -> Vec<String> {
    normalize(phrase).lemmas
}

// Classic English function-word list (NLTK flavour).
const BUILTIN_STOPWORDS: &[&str] = &[
    "i",
    "me",
    "my",
    "myself",
    "we",
    "our",
    "ours",
    "ourselves",
    "you",
    "your",
    "yours",
    "yourself",
    "yourselves",
    "he",
    "him",
    "his",
    "himself",
    "she",
    "her",
    "hers",
    "herself",
    "it",
    "its",
    "itself",
    "they",
    "them",
    "their",
    "theirs",
    "themselves",
    "what",
    "which",
    "who",
    "whom",
    "this",
    "that",
    "these",
    "those",
    "am",
    "is",
    "are",
    "was",
    "were",
    "be",
    "been",
    "being",
    "have",
    "has",
    "had",
    "having",
    "do",
    "does",
    "did",
    "doing",
    "a",
    "an",
    "the",
    "and",
    "but",
    "if",
    "or",
    "because",
    "as",
    "until",
    "while",
    "of",
    "at",
    "by",
    "for",
    "with",
    "about",
    "against",
    "between",
    "into",
    "through",
    "during",
    "before",
    "after",
    "above",
    "below",
    "to",
    "from",
    "up",
    "down",
    "in",
    "out",
    "on",
    "off",
    "over",
    "under",
    "again",
    "further",
    "then",
    "once",
    "here",
    "there",
    "when",
    "where",
    "why",
    "how",
    "all",
    "any",
    "both",
    "each",
    "few",
    "more",
    "most",
    "other",
    "some",
    "such",
    "no",
    "nor",
    "not",
    "only",
    "own",
    "same",
    "so",
    "than",
    "too",
    "very",
    "s",
    "t",
    "can",
    "will",
    "just",
    "don",
    "dont",
    "should",
    "now",
    "d",
    "ll",
    "m",
    "o",
    "re",
    "ve",
    "y",
    "ain",
    "aren",
    "couldn",
    "didn",
    "doesn",
    "hadn",
    "hasn",
    "haven",
    "isn",
    "ma",
    "mightn",
    "mustn",
    "needn",
    "shan",
    "shouldn",
    "wasn",
    "weren",
    "won",
    "wouldn",
    "would",
    "could",
    "also",
    "us",
];

/// A set of stopwords, stored in lemmatized form so it can be compared
/// against lemmas directly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stopwords {
    id: String,
    words: HashSet<String>,
}

impl Stopwords {
    pub fn builtin() -> Self {
        Self::from_words(BUILTIN_STOPWORDS_ID, BUILTIN_STOPWORDS.iter().copied())
    }

    pub fn none() -> Self {
        Self::from_words("none", std::iter::empty::<&str>())
    }

    pub fn from_words<'a>(id: &str, words: impl IntoIterator<Item = &'a str>) -> Self {
        let words = words
            .into_iter()
            .map(str::trim)
            .filter(|w| !w.is_empty() && !w.starts_with('#'))
            .map(lemmatize)
            .filter(|w| !w.is_empty())
            .collect();
        Self {
            id: id.to_string(),
            words,
        }
    }

    /// One word per line; blank lines and `#` comments ignored.
    pub fn from_file(path: &Path) -> std::io::Result<Self> {
        let text = fs::read_to_string(path)?;
        Ok(Self::from_words(
            &format!("file:{}", path.display()),
            text.lines(),
        ))
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn contains(&self, lemma: &str) -> bool {
        self.words.contains(lemma)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Words in sorted order, for persisting the list alongside a model.
    pub fn sorted_words(&self) -> Vec<String> {
        let mut w: Vec<String> = self.words.iter().cloned().collect();
        w.sort();
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn words(toks: &[(String, (usize, usize))]) -> Vec<&str> {
        toks.iter().map(|(t, _)| t.as_str()).collect()
    }

    #[test]
    fn tokenize_keeps_inner_apostrophe() {
        let text = "Don't stop\u{2014}now";
        let toks = tokenize(text);
        assert_eq!(words(&toks), ["Don't", "stop", "now"]);
        for (t, (s, e)) in &toks {
            assert_eq!(&text[*s..*e], t);
        }
        assert_eq!(toks[0].1, (0, 5));
        assert_eq!(toks[1].1, (6, 10));
    }

    #[test]
    fn tokenize_edge_cases() {
        assert!(tokenize("").is_empty());
        assert_eq!(words(&tokenize("abc123 x")), ["abc123", "x"]);
        assert_eq!(
            words(&tokenize("'quoted' rock'n'roll it's")),
            ["quoted", "rock'n'roll", "it's"]
        );
        assert_eq!(words(&tokenize("café naïve")), ["café", "naïve"]);
    }

    // Hand-traced through the rule table:
    //   running: -ing -> "runn", double n undoubled -> "run"
    //   movies: "movie" is in the -ie noun list -> drop s
    #[test]
    fn lemmatize_rule_table() {
        let cases = [
            ("Running", "run"),
            ("cat", "cat"),
            ("Movies", "movie"),
            ("cats", "cat"),
            ("stories", "story"),
            ("classes", "class"),
            ("boxes", "box"),
            ("watches", "watch"),
            ("making", "make"),
            ("hoping", "hope"),
            ("hopping", "hop"),
            ("played", "play"),
            ("stopped", "stop"),
            ("loved", "love"),
            ("acting", "act"),
            ("tried", "try"),
            ("died", "die"),
            ("films", "film"),
            ("were", "be"),
            ("GREAT", "great"),
            ("bus", "bus"),
            ("this", "this"),
            ("king", "king"),
            ("bring", "bring"),
            ("Don't", "dont"),
            ("director's", "director"),
            ("abc123", "abc123"),
        ];
        for (input, want) in cases {
            assert_eq!(lemmatize(input), want, "lemmatize({input})");
        }
    }

    #[test]
    fn exception_targets_are_fixpoints() {
        for (_, target) in EXCEPTIONS {
            assert_eq!(lemmatize(target), *target);
        }
        for noun in IE_NOUNS {
            assert_eq!(lemmatize(noun), *noun);
        }
    }

    #[test]
    fn normalize_sentence() {
        let n = normalize("The Films were GREAT!");
        assert_eq!(n.lemmas, ["the", "film", "be", "great"]);
        assert_eq!(n.tokens, ["The", "Films", "were", "GREAT"]);
        assert!(normalize(" ").is_empty());
        let again = normalize(&n.lemmas.join(" "));
        assert_eq!(again.lemmas, n.lemmas);
    }

    #[test]
    fn builtin_stopwords_are_lemmatized() {
        let sw = Stopwords::builtin();
        assert!(sw.contains("the"));
        assert!(sw.contains("be"));
        assert!(sw.contains("not"));
        assert!(!sw.contains("great"));
        assert_eq!(sw.id(), BUILTIN_STOPWORDS_ID);
    }

    proptest! {
        #[test]
        fn lemmatize_idempotent(word in "[a-zA-Z']{1,14}") {
            let once = lemmatize(&word);
            prop_assert_eq!(lemmatize(&once), once.clone());
            prop_assert!(!once.chars().any(|c| c.is_uppercase() || c.is_ascii_punctuation()));
        }

        #[test]
        fn offsets_round_trip(text in "\\PC{0,60}") {
            let n = normalize(&text);
            prop_assert_eq!(n.tokens.len(), n.lemmas.len());
            prop_assert_eq!(n.tokens.len(), n.offsets.len());
            let mut last_end = 0;
            for (tok, (s, e)) in n.tokens.iter().zip(&n.offsets) {
                prop_assert!(*s >= last_end && s < e);
                prop_assert_eq!(&text[*s..*e], tok.as_str());
                last_end = *e;
            }
            for lemma in &n.lemmas {
                prop_assert!(lemma.chars().all(char::is_alphanumeric));
            }
        }

        #[test]
        fn normalize_deterministic(text in "[a-zA-Z ,.!']{0,40}") {
            prop_assert_eq!(normalize(&text), normalize(&text));
        }
    }
}
