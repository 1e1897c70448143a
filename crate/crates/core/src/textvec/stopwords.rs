use std::collections::{HashMap, HashSet};

const BUNDLED_ENGLISH: &str = include_str!("../../data/stopwords_en.txt");

/// Number of most frequent corpus tokens added on top of the standard list.
pub const CORPUS_TOP_N: usize = 200;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StopwordSet {
    words: HashSet<String>,
}

impl StopwordSet {
    /// Plain text, one word per line. Blank lines and `#` comments skipped.
    pub fn parse(text: &str) -> Self {
        let words = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        Self { words }
    }

    /// The bundled English list.
    pub fn english() -> Self {
        Self::parse(BUNDLED_ENGLISH)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn insert(&mut self, word: impl Into<String>) -> bool {
        self.words.insert(word.into())
    }

    /// Sorted contents, for stable output.
    pub fn to_sorted_vec(&self) -> Vec<String> {
        let mut v: Vec<_> = self.words.iter().cloned().collect();
        v.sort();
        v
    }
}

/// Union of `standard` with the [`CORPUS_TOP_N`] most frequent tokens of
/// `corpus`. Frequency ties are ordered lexicographically before truncation.
pub fn build_stopwords<'a, I, D>(standard: &StopwordSet, corpus: I) -> StopwordSet
where
    I: IntoIterator<Item = D>,
    D: IntoIterator<Item = &'a String>,
{
    let mut counts: HashMap<&'a str, u64> = HashMap::new();
    for doc in corpus {
        for tok in doc {
            *counts.entry(tok.as_str()).or_default() += 1;
        }
    }
    let mut ranked: Vec<(&str, u64)> = counts.into_iter().collect();
    ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));

    let mut out = standard.clone();
    for (tok, _) in ranked.into_iter().take(CORPUS_TOP_N) {
        out.insert(tok);
    }
    out
}
