//! Local news corpus with conjunctive term search restricted to a date range
//! and BM25 ranking.

use std::collections::{HashMap, HashSet};
use std::io::BufRead;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{DateRange, Reject};
use crate::textvec::{phrase_tokens, tokenize};

#[derive(Debug, Error)]
pub enum NewsError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub const BM25_K1: f64 = 1.2;
pub const BM25_B: f64 = 0.75;
pub const DEFAULT_TOP_K: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewsArticle {
    pub id: String,
    pub title: String,
    pub body: String,
    pub published: NaiveDate,
    #[serde(default)]
    pub url: Option<String>,
}

impl NewsArticle {
    fn validate(&self) -> Result<(), String> {
        if self.id.is_empty() {
            return Err("empty id".into());
        }
        if self.title.trim().is_empty() {
            return Err("empty title".into());
        }
        if self.body.trim().is_empty() {
            return Err("empty body".into());
        }
        Ok(())
    }
}

#[derive(Debug, Default, Clone)]
pub struct NewsStore {
    articles: Vec<NewsArticle>,
    ids: HashSet<String>,
    doc_len: Vec<u32>,
    total_len: u64,
    // token -> (article index, term frequency), ascending by index.
    postings: HashMap<String, Vec<(u32, u32)>>,
}

impl NewsStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.articles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.articles.is_empty()
    }

    pub fn articles(&self) -> &[NewsArticle] {
        &self.articles
    }

    pub fn get(&self, idx: usize) -> &NewsArticle {
        &self.articles[idx]
    }

    /// Adds one article; duplicate ids and invalid records are refused.
    pub fn insert(&mut self, article: NewsArticle) -> Result<usize, String> {
        article.validate()?;
        if self.ids.contains(&article.id) {
            return Err(format!("duplicate id {:?}", article.id));
        }
        let idx = self.articles.len();
        let tokens = tokenize(&format!("{} {}", article.title, article.body));
        let mut tf: HashMap<String, u32> = HashMap::new();
        for t in &tokens {
            *tf.entry(t.clone()).or_default() += 1;
        }
        for (t, n) in tf {
            self.postings.entry(t).or_default().push((idx as u32, n));
        }
        self.doc_len.push(tokens.len() as u32);
        self.total_len += tokens.len() as u64;
        self.ids.insert(article.id.clone());
        self.articles.push(article);
        Ok(idx)
    }

    /// Reads an articles file (one JSON object per line).
    pub fn ingest<R: BufRead>(input: R) -> Result<(Self, Vec<Reject>), NewsError> {
        let mut store = Self::new();
        let mut rejects = Vec::new();
        for (idx, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let outcome = serde_json::from_str::<NewsArticle>(&line)
                .map_err(|e| format!("malformed record: {e}"))
                .and_then(|a| store.insert(a));
            if let Err(reason) = outcome {
                rejects.push(Reject { line: idx + 1, reason });
            }
        }
        Ok((store, rejects))
    }

    fn idf(&self, df: usize) -> f64 {
        let n = self.articles.len() as f64;
        let df = df as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    /// BM25 score of `idx` for the given (deduplicated) tokens.
    pub fn bm25(&self, idx: usize, tokens: &[String]) -> f64 {
        let avgdl = self.total_len as f64 / self.articles.len().max(1) as f64;
        let dl = f64::from(self.doc_len[idx]);
        tokens
            .iter()
            .filter_map(|t| {
                let posting = self.postings.get(t)?;
                let pos = posting.binary_search_by_key(&(idx as u32), |p| p.0).ok()?;
                let tf = f64::from(posting[pos].1);
                let norm = tf + BM25_K1 * (1.0 - BM25_B + BM25_B * dl / avgdl);
                Some(self.idf(posting.len()) * tf * (BM25_K1 + 1.0) / norm)
            })
            .sum()
    }

    /// Articles published within `range` containing every token of `term`,
    /// best BM25 first; ties by (published, id). Returns indices.
    pub fn search_indices(&self, term: &str, range: DateRange, k: usize) -> Vec<usize> {
        let mut tokens = phrase_tokens(term);
        tokens.sort();
        tokens.dedup();
        if tokens.is_empty() || k == 0 {
            return Vec::new();
        }
        let mut lists: Vec<&Vec<(u32, u32)>> = Vec::with_capacity(tokens.len());
        for t in &tokens {
            match self.postings.get(t) {
                Some(p) => lists.push(p),
                None => return Vec::new(),
            }
        }
        lists.sort_by_key(|l| l.len());
        let mut scored: Vec<(f64, usize)> = lists[0]
            .iter()
            .map(|p| p.0)
            .filter(|&i| lists[1..].iter().all(|l| l.binary_search_by_key(&i, |p| p.0).is_ok()))
            .map(|i| i as usize)
            .filter(|&i| range.contains(self.articles[i].published))
            .map(|i| (self.bm25(i, &tokens), i))
            .collect();
        scored.sort_by(|a, b| {
            b.0.total_cmp(&a.0).then_with(|| {
                let (x, y) = (&self.articles[a.1], &self.articles[b.1]);
                x.published.cmp(&y.published).then_with(|| x.id.cmp(&y.id))
            })
        });
        scored.truncate(k);
        scored.into_iter().map(|(_, i)| i).collect()
    }

    pub fn search(&self, term: &str, range: DateRange, k: usize) -> Vec<&NewsArticle> {
        self.search_indices(term, range, k)
            .into_iter()
            .map(|i| &self.articles[i])
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn day(d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(2014, 4, d).unwrap()
    }

    fn art(id: &str, title: &str, body: &str, d: u32) -> NewsArticle {
        NewsArticle {
            id: id.into(),
            title: title.into(),
            body: body.into(),
            published: day(d),
            url: None,
        }
    }

    fn april() -> DateRange {
        DateRange::new(day(1), day(30)).unwrap()
    }

    #[test]
    fn ingest_and_duplicates() {
        let input = concat!(
            r#"{"id":"a","title":"Smog alert","body":"air pollution","published":"2014-04-02","url":null}"#,
            "\n",
            r#"{"id":"a","title":"Again","body":"dup","published":"2014-04-02","url":null}"#,
            "\n",
            r#"{"id":"b","title":"","body":"no title","published":"2014-04-02"}"#,
            "\n",
            r#"{"id":"c","title":"x","body":"y","published":"2014-13-02"}"#,
            "\n",
            r#"{"id":"d","title":"Ok","body":"fine","published":"2014-04-03","url":"http://e"}"#,
            "\n",
        );
        let (store, rejects) = NewsStore::ingest(input.as_bytes()).unwrap();
        assert_eq!(store.len(), 2);
        assert_eq!(rejects.iter().map(|r| r.line).collect::<Vec<_>>(), vec![2, 3, 4]);
        assert!(rejects[0].reason.contains("duplicate"));
    }

    #[test]
    fn empty_store_finds_nothing() {
        let (store, _) = NewsStore::ingest(&b""[..]).unwrap();
        assert!(store.is_empty());
        assert!(store.search("smog", april(), 10).is_empty());
    }

    #[test]
    fn absent_term_and_single_match() {
        let mut store = NewsStore::new();
        store.insert(art("a", "Smog", "air pollution over london", 2)).unwrap();
        store.insert(art("b", "Eggs", "easter chocolate", 3)).unwrap();
        assert!(store.search("volcano", april(), 10).is_empty());
        let hits = store.search("chocolate", april(), 1);
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].id, "b");
        assert_eq!(store.search("air pollution", april(), 10)[0].id, "a");
        // Conjunctive: both tokens required.
        assert!(store.search("air chocolate", april(), 10).is_empty());
    }

    #[test]
    fn higher_tf_ranks_first() {
        let mut store = NewsStore::new();
        store.insert(art("one", "t", "smog a b c d e f g h i", 2)).unwrap();
        store
            .insert(art("five", "t", "smog smog smog smog smog f g h i j", 2))
            .unwrap();
        store.insert(art("other", "t", "rain k l m n o p q r s", 2)).unwrap();
        let ids: Vec<_> = store
            .search("smog", april(), 10)
            .iter()
            .map(|a| a.id.as_str())
            .collect();
        assert_eq!(ids, ["five", "one"]);
        assert!(store.bm25(1, &["smog".into()]) > store.bm25(0, &["smog".into()]));
    }

    #[test]
    fn date_range_and_ties() {
        let mut store = NewsStore::new();
        store.insert(art("z", "t", "smog", 5)).unwrap();
        store.insert(art("y", "t", "smog", 4)).unwrap();
        store.insert(art("x", "t", "smog", 4)).unwrap();
        store.insert(art("late", "t", "smog", 20)).unwrap();
        let range = DateRange::new(day(4), day(5)).unwrap();
        let ids: Vec<_> = store.search("smog", range, 10).iter().map(|a| a.id.as_str()).collect();
        assert_eq!(ids, ["x", "y", "z"]);
        assert_eq!(store.search("smog", range, 2).len(), 2);
    }
}
