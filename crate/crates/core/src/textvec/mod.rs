//! Tokenisation, TF/IDF vectors, cosine similarity and the pairwise cosine
//! similarity score (PCSS) used to judge how coherent a document group is.

mod stem;
mod stopwords;

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

pub use stem::LancasterStemmer;
pub use stopwords::{build_stopwords, StopwordSet, CORPUS_TOP_N};

#[derive(Debug, Error, PartialEq)]
pub enum TextError {
    #[error("PCSS needs at least {needed} vectors, got {got}")]
    TooFewVectors { needed: usize, got: usize },
    #[error("cross-PCSS needs two non-empty vector sets")]
    EmptySet,
    #[error("invalid stemmer rule on line {line}: {rule:?}")]
    BadRule { line: usize, rule: String },
    #[error("invalid n-gram range {0}..={1}")]
    BadNgramRange(usize, usize),
}

/// A document reduced to its cleaned, ordered tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenDoc {
    pub id: String,
    pub tokens: Vec<String>,
}

impl TokenDoc {
    pub fn new(id: impl Into<String>, text: &str) -> Self {
        Self {
            id: id.into(),
            tokens: tokenize(text),
        }
    }
}

/// Lowercases, drops URLs and `@mentions`, keeps hashtag words and splits the
/// rest on runs of non-alphanumeric characters.
pub fn tokenize(text: &str) -> Vec<String> {
    let lower = text.to_lowercase();
    let mut out = Vec::new();
    for chunk in lower.split_whitespace() {
        let mut rest = chunk.trim_start_matches(|c: char| !c.is_alphanumeric() && c != '@');
        if rest.starts_with("http://") || rest.starts_with("https://") || rest.starts_with("www.") {
            continue;
        }
        if let Some(handle) = rest.strip_prefix('@') {
            rest = handle.trim_start_matches(|c: char| c.is_alphanumeric() || c == '_');
        }
        out.extend(
            rest.split(|c: char| !c.is_alphanumeric())
                .filter(|t| !t.is_empty())
                .map(String::from),
        );
    }
    out
}

/// Splits a search phrase into match tokens (lowercase, alphanumeric runs).
pub fn phrase_tokens(phrase: &str) -> Vec<String> {
    phrase
        .to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(String::from)
        .collect()
}

/// True when `needle` occurs as a contiguous run inside `haystack`.
pub fn contains_sequence(haystack: &[String], needle: &[String]) -> bool {
    !needle.is_empty() && haystack.len() >= needle.len() && haystack.windows(needle.len()).any(|w| w == needle)
}

/// Term → non-negative weight. Keys are kept sorted so every reduction over a
/// vector happens in the same order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVector(BTreeMap<String, f64>);

impl SparseVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let mut v = Self::new();
        for (k, w) in pairs {
            v.add(k, w);
        }
        v
    }

    pub fn add(&mut self, term: impl Into<String>, weight: f64) {
        debug_assert!(weight.is_finite() && weight >= 0.0);
        *self.0.entry(term.into()).or_insert(0.0) += weight;
    }

    pub fn get(&self, term: &str) -> Option<f64> {
        self.0.get(term).copied()
    }

    pub fn contains(&self, term: &str) -> bool {
        self.0.contains_key(term)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn is_zero(&self) -> bool {
        self.0.values().all(|w| *w == 0.0)
    }

    pub fn norm(&self) -> f64 {
        self.0.values().map(|w| w * w).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (small, large) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        small.0.iter().filter_map(|(k, w)| large.0.get(k).map(|x| w * x)).sum()
    }

    pub fn scaled(&self, factor: f64) -> SparseVector {
        SparseVector(self.0.iter().map(|(k, v)| (k.clone(), v * factor)).collect())
    }
}

/// Which n-gram lengths to emit and whether to stem before building them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NgramRange {
    pub min: usize,
    pub max: usize,
}

impl NgramRange {
    pub const UNIGRAMS: NgramRange = NgramRange { min: 1, max: 1 };

    pub fn new(min: usize, max: usize) -> Result<Self, TextError> {
        if min == 0 || min > max {
            return Err(TextError::BadNgramRange(min, max));
        }
        Ok(Self { min, max })
    }
}

/// Stopword removal, optional stemming, then n-grams joined with a space.
pub fn document_terms(
    tokens: &[String],
    ngrams: NgramRange,
    stopwords: &StopwordSet,
    stemmer: Option<&LancasterStemmer>,
) -> Vec<String> {
    let kept: Vec<String> = tokens
        .iter()
        .filter(|t| !stopwords.contains(t))
        .filter_map(|t| {
            let term = match stemmer {
                Some(s) => s.stem(t),
                None => t.clone(),
            };
            (!term.is_empty() && !stopwords.contains(&term)).then_some(term)
        })
        .collect();
    let mut terms = Vec::new();
    for n in ngrams.min..=ngrams.max {
        if n > kept.len() {
            break;
        }
        terms.extend(kept.windows(n).map(|w| w.join(" ")));
    }
    terms
}

/// TF/IDF vectors over exactly this document group: `tf` is the raw count and
/// `idf = ln((1 + N) / (1 + df)) + 1`.
pub fn tfidf_vectors(
    docs: &[TokenDoc],
    ngrams: NgramRange,
    stopwords: &StopwordSet,
    stemmer: Option<&LancasterStemmer>,
) -> Vec<SparseVector> {
    let term_counts: Vec<BTreeMap<String, u32>> = docs
        .iter()
        .map(|d| {
            let mut tf = BTreeMap::new();
            for t in document_terms(&d.tokens, ngrams, stopwords, stemmer) {
                *tf.entry(t).or_insert(0) += 1;
            }
            tf
        })
        .collect();

    let mut df: HashMap<&str, u32> = HashMap::new();
    for tf in &term_counts {
        for term in tf.keys() {
            *df.entry(term.as_str()).or_default() += 1;
        }
    }
    let n = docs.len() as f64;
    term_counts
        .iter()
        .map(|tf| {
            SparseVector(
                tf.iter()
                    .map(|(term, &count)| {
                        let idf = ((1.0 + n) / (1.0 + f64::from(df[term.as_str()]))).ln() + 1.0;
                        (term.clone(), f64::from(count) * idf)
                    })
                    .collect(),
            )
        })
        .collect()
}

/// Cosine similarity; 0 when either vector is zero.
pub fn cosine(a: &SparseVector, b: &SparseVector) -> f64 {
    let denom = a.norm() * b.norm();
    if denom == 0.0 {
        return 0.0;
    }
    (a.dot(b) / denom).clamp(0.0, 1.0)
}

/// Arithmetic mean vector.
pub fn centroid(vectors: &[SparseVector]) -> SparseVector {
    let mut sum = SparseVector::new();
    for v in vectors {
        for (k, w) in v.iter() {
            sum.add(k, w);
        }
    }
    if vectors.is_empty() {
        return sum;
    }
    sum.scaled(1.0 / vectors.len() as f64)
}

/// Mean minus population standard deviation.
fn mean_minus_sd(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    mean - var.sqrt()
}

/// Pairwise cosine similarity score of a document group: cosines over all
/// unordered pairs, mean minus population standard deviation.
pub fn pcss(vectors: &[SparseVector]) -> Result<f64, TextError> {
    if vectors.len() < 2 {
        return Err(TextError::TooFewVectors {
            needed: 2,
            got: vectors.len(),
        });
    }
    let mut sims = Vec::with_capacity(vectors.len() * (vectors.len() - 1) / 2);
    for (i, a) in vectors.iter().enumerate() {
        for b in &vectors[i + 1..] {
            sims.push(cosine(a, b));
        }
    }
    Ok(mean_minus_sd(&sims))
}

/// PCSS over the cross pairs `A × B`.
pub fn cross_pcss(a: &[SparseVector], b: &[SparseVector]) -> Result<f64, TextError> {
    if a.is_empty() || b.is_empty() {
        return Err(TextError::EmptySet);
    }
    let sims: Vec<f64> = a.iter().flat_map(|x| b.iter().map(move |y| cosine(x, y))).collect();
    Ok(mean_minus_sd(&sims))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn none() -> StopwordSet {
        StopwordSet::default()
    }

    fn e(i: usize) -> SparseVector {
        SparseVector::from_pairs([(format!("e{i}"), 1.0)])
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(
            tokenize("RIP Robin Williams http://t.co/x"),
            ["rip", "robin", "williams"]
        );
        assert_eq!(tokenize("#asthma #smog"), ["asthma", "smog"]);
        assert!(tokenize("").is_empty());
        assert_eq!(
            tokenize("@bob i can't breathe #asthma, (https://x.y) www.z.com !!"),
            ["i", "can", "t", "breathe", "asthma"]
        );
        assert_eq!(tokenize("@bob's dog"), ["s", "dog"]);
    }

    #[test]
    fn idf_single_doc_is_raw_tf() {
        let docs = [TokenDoc::new("a", "flu flu cold")];
        let v = tfidf_vectors(&docs, NgramRange::UNIGRAMS, &none(), None);
        assert_eq!(v[0].get("flu"), Some(2.0));
        assert_eq!(v[0].get("cold"), Some(1.0));
    }

    #[test]
    fn idf_two_docs() {
        let docs = [TokenDoc::new("a", "smog air"), TokenDoc::new("b", "air")];
        let v = tfidf_vectors(&docs, NgramRange::UNIGRAMS, &none(), None);
        assert_abs_diff_eq!(v[0].get("smog").unwrap(), (1.5f64).ln() + 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v[0].get("smog").unwrap(), 1.405465, epsilon = 1e-6);
        assert_eq!(v[0].get("air"), Some(1.0));
        assert_eq!(v[1].get("air"), Some(1.0));
    }

    #[test]
    fn ngrams_skip_stopwords_and_stem() {
        let stop = StopwordSet::parse("the\nof");
        let docs = [TokenDoc::new("a", "the death of robin williams")];
        let v = tfidf_vectors(&docs, NgramRange::new(1, 3).unwrap(), &stop, None);
        for key in ["death", "robin williams", "death robin williams"] {
            assert!(v[0].contains(key), "{key}");
        }
        assert!(!v[0].contains("the"));
        let stemmed = tfidf_vectors(&docs, NgramRange::UNIGRAMS, &stop, Some(&LancasterStemmer::default()));
        assert!(stemmed[0].contains("william"));
    }

    #[test]
    fn bad_ngram_range() {
        assert!(NgramRange::new(0, 2).is_err());
        assert!(NgramRange::new(3, 2).is_err());
    }

    #[test]
    fn cosine_examples() {
        let a = SparseVector::from_pairs([("x", 1.0), ("y", 1.0)]);
        let b = SparseVector::from_pairs([("x", 1.0)]);
        assert_abs_diff_eq!(cosine(&a, &a), 1.0, epsilon = 1e-15);
        assert_eq!(cosine(&e(1), &e(2)), 0.0);
        assert_abs_diff_eq!(cosine(&a, &b), 1.0 / 2f64.sqrt(), epsilon = 1e-15);
        assert_eq!(cosine(&a, &SparseVector::new()), 0.0);
    }

    #[test]
    fn pcss_examples() {
        let v = e(1);
        assert_abs_diff_eq!(pcss(&[v.clone(), v.clone(), v.clone()]).unwrap(), 1.0, epsilon = 1e-12);
        assert_eq!(pcss(&[e(1), e(2), e(3)]).unwrap(), 0.0);
        let got = pcss(&[e(1), e(1), e(2)]).unwrap();
        assert_abs_diff_eq!(got, (1.0 - 2f64.sqrt()) / 3.0, epsilon = 1e-12);
        assert_eq!(pcss(&[e(1)]), Err(TextError::TooFewVectors { needed: 2, got: 1 }));
    }

    #[test]
    fn cross_pcss_examples() {
        assert_abs_diff_eq!(cross_pcss(&[e(1)], &[e(1)]).unwrap(), 1.0, epsilon = 1e-12);
        assert_eq!(cross_pcss(&[e(1)], &[e(2), e(3)]).unwrap(), 0.0);
        assert_abs_diff_eq!(cross_pcss(&[e(1)], &[e(1), e(2)]).unwrap(), 0.0, epsilon = 1e-12);
        assert_eq!(cross_pcss(&[], &[e(1)]), Err(TextError::EmptySet));
    }

    #[test]
    fn centroid_is_mean() {
        let c = centroid(&[
            SparseVector::from_pairs([("a", 2.0)]),
            SparseVector::from_pairs([("b", 4.0)]),
        ]);
        assert_eq!(c.get("a"), Some(1.0));
        assert_eq!(c.get("b"), Some(2.0));
    }

    #[test]
    fn sequence_match() {
        let hay = tokenize("throwing up all night");
        assert!(contains_sequence(&hay, &phrase_tokens("Throwing Up")));
        assert!(!contains_sequence(&hay, &phrase_tokens("up throwing")));
        assert!(!contains_sequence(&hay, &[]));
    }
}
