//! Terms, news and tweets summarisation of a detected event.
//!
//! 1. Fetch the gist (event-period messages) and the baseline (the preceding
//!    `baseline_days`), and stop early if the gist is too small.
//! 2. Keep unigrams/bigrams present in at least `df_gate` of the gist, test each
//!    for over-representation against the baseline with a one-sided Fisher
//!    exact test, and take the top two unigrams and top two bigrams. The
//!    event's primary keyword is always searched as well.
//! 3. Search the news store with every term over the event dates. A term
//!    survives if its article bodies are coherent (PCSS above the threshold);
//!    a survivor is good if its article titles are coherent with at least one
//!    other survivor's titles (cross-PCSS above the same threshold).
//! 4. Rank the good articles, the messages containing a good term (STT) and
//!    the whole gist (GTT) by cosine similarity to their group's mean vector.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::sync::OnceLock;

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{Corpus, DateRange, GroupId, Message};
use crate::newsstore::NewsStore;
use crate::surveillance::{Alarm, Event};
use crate::textvec::{
    centroid, contains_sequence, cosine, cross_pcss, pcss, phrase_tokens, tfidf_vectors, tokenize, LancasterStemmer,
    NgramRange, SparseVector, StopwordSet, TokenDoc,
};

#[derive(Debug, Error, PartialEq)]
pub enum TntError {
    #[error("contingency table has an empty row (gist {gist}, baseline {baseline})")]
    ZeroMargin { gist: u64, baseline: u64 },
    #[error("gist has {got} messages, need at least {needed}")]
    TooSmall { got: usize, needed: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TntConfig {
    pub min_gist: usize,
    pub df_gate: f64,
    pub alpha: f64,
    pub pcss_threshold: f64,
    pub baseline_days: u64,
    pub search_k: usize,
    pub top_unigrams: usize,
    pub top_bigrams: usize,
    pub top_k: usize,
}

impl Default for TntConfig {
    fn default() -> Self {
        Self {
            min_gist: 30,
            df_gate: 0.05,
            alpha: 0.05,
            pcss_threshold: -0.08,
            baseline_days: 28,
            search_k: 10,
            top_unigrams: 2,
            top_bigrams: 2,
            top_k: 5,
        }
    }
}

/// Stopwords and stemmer shared by every summary.
#[derive(Debug, Clone)]
pub struct TextResources {
    pub stopwords: StopwordSet,
    pub stemmer: LancasterStemmer,
}

impl Default for TextResources {
    fn default() -> Self {
        Self {
            stopwords: StopwordSet::english(),
            stemmer: LancasterStemmer::default(),
        }
    }
}

/// The messages of `group`/`region` dated within `range`.
fn fetch(corpus: &Corpus, group: GroupId, region: u32, range: DateRange) -> Vec<&Message> {
    corpus
        .messages_in(group, region, range)
        .into_iter()
        .map(|pm| &pm.message)
        .collect()
}

pub fn gist_range(alarm: &Alarm) -> DateRange {
    DateRange {
        start: alarm.start_date,
        end: alarm.end_date,
    }
}

/// `[start - days, start - 1]`.
pub fn baseline_range(start: NaiveDate, days: u64) -> Option<DateRange> {
    (days > 0).then(|| DateRange {
        start: start - Days::new(days),
        end: start - Days::new(1),
    })
}

pub fn fetch_gist<'a>(corpus: &'a Corpus, alarm: &Alarm) -> Vec<&'a Message> {
    fetch(corpus, alarm.group, alarm.region, gist_range(alarm))
}

pub fn fetch_baseline<'a>(corpus: &'a Corpus, alarm: &Alarm, days: u64) -> Vec<&'a Message> {
    baseline_range(alarm.start_date, days)
        .map(|r| fetch(corpus, alarm.group, alarm.region, r))
        .unwrap_or_default()
}

const LN_FACT_TABLE: usize = 4096;

fn ln_factorial(n: u64) -> f64 {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let mut t = Vec::with_capacity(LN_FACT_TABLE);
        let mut acc = 0.0f64;
        t.push(0.0);
        for i in 1..LN_FACT_TABLE {
            acc += (i as f64).ln();
            t.push(acc);
        }
        t
    });
    if (n as usize) < LN_FACT_TABLE {
        return table[n as usize];
    }
    // Stirling series; the truncation error is far below f64 resolution here.
    let x = n as f64;
    x * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI * x).ln() + 1.0 / (12.0 * x) - 1.0 / (360.0 * x.powi(3))
        + 1.0 / (1260.0 * x.powi(5))
}

fn ln_choose(n: u64, k: u64) -> f64 {
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// One-sided ("greater") Fisher exact test on
///
/// ```text
///             with   without
/// gist          a       b
/// baseline      c       d
/// ```
///
/// i.e. `P(X >= a)` for `X` hypergeometric with the observed margins.
pub fn fisher_one_sided(a: u64, b: u64, c: u64, d: u64) -> Result<f64, TntError> {
    let (gist, baseline) = (a + b, c + d);
    if gist == 0 || baseline == 0 {
        return Err(TntError::ZeroMargin { gist, baseline });
    }
    let total = gist + baseline;
    let with = a + c;
    let hi = gist.min(with);
    if a <= gist.saturating_sub(total - with) {
        // `a` is at or below the support's lower end.
        return Ok(1.0);
    }
    let denom = ln_choose(total, gist);
    let p: f64 = (a..=hi)
        .map(|x| (ln_choose(with, x) + ln_choose(total - with, gist - x) - denom).exp())
        .sum();
    Ok(p.min(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermCandidate {
    pub ngram: String,
    pub gist_df: u32,
    pub baseline_df: u32,
    pub p_value: f64,
}

impl TermCandidate {
    pub fn order(&self) -> usize {
        self.ngram.split(' ').count()
    }
}

/// Unigrams and adjacent bigrams of non-stopword tokens, once each.
fn message_ngrams(text: &str, stopwords: &StopwordSet) -> HashSet<String> {
    let toks = tokenize(text);
    let keep: Vec<bool> = toks.iter().map(|t| !stopwords.contains(t)).collect();
    let mut out = HashSet::new();
    for (i, t) in toks.iter().enumerate() {
        if !keep[i] {
            continue;
        }
        out.insert(t.clone());
        if i + 1 < toks.len() && keep[i + 1] {
            out.insert(format!("{t} {}", toks[i + 1]));
        }
    }
    out
}

fn document_frequencies<'a, I>(messages: I, stopwords: &StopwordSet) -> HashMap<String, u32>
where
    I: IntoIterator<Item = &'a Message>,
{
    let mut df = HashMap::new();
    for m in messages {
        for g in message_ngrams(&m.text, stopwords) {
            *df.entry(g).or_insert(0) += 1;
        }
    }
    df
}

/// Smallest document frequency that clears `fraction` of `n` messages.
pub fn df_gate(fraction: f64, n: usize) -> u32 {
    ((fraction * n as f64) - 1e-9).ceil().max(0.0) as u32
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CandidateTerms {
    /// Every n-gram that cleared the frequency gate, with its test result.
    pub tested: Vec<TermCandidate>,
    /// Top unigrams then top bigrams among the significant ones.
    pub selected: Vec<TermCandidate>,
}

fn significance_order(x: &TermCandidate, y: &TermCandidate) -> std::cmp::Ordering {
    x.p_value
        .total_cmp(&y.p_value)
        .then(y.gist_df.cmp(&x.gist_df))
        .then_with(|| x.ngram.cmp(&y.ngram))
}

/// Discriminative unigrams/bigrams of the gist against the baseline. Counts
/// are per-message presence. An empty baseline yields no significant terms.
pub fn extract_candidate_terms(
    gist: &[&Message],
    baseline: &[&Message],
    stopwords: &StopwordSet,
    cfg: &TntConfig,
) -> Result<CandidateTerms, TntError> {
    if gist.len() < cfg.min_gist {
        return Err(TntError::TooSmall {
            got: gist.len(),
            needed: cfg.min_gist,
        });
    }
    let gate = df_gate(cfg.df_gate, gist.len()).max(1);
    let gist_df = document_frequencies(gist.iter().copied(), stopwords);
    let frequent: HashMap<&str, u32> = gist_df
        .iter()
        .filter(|(_, &n)| n >= gate)
        .map(|(g, &n)| (g.as_str(), n))
        .collect();
    if baseline.is_empty() {
        return Ok(CandidateTerms::default());
    }
    let mut base_df: HashMap<&str, u32> = HashMap::new();
    for m in baseline {
        for g in message_ngrams(&m.text, stopwords) {
            if let Some((k, _)) = frequent.get_key_value(g.as_str()) {
                *base_df.entry(k).or_insert(0) += 1;
            }
        }
    }
    let (n_gist, n_base) = (gist.len() as u64, baseline.len() as u64);
    let mut tested = Vec::with_capacity(frequent.len());
    for (&ngram, &g) in &frequent {
        let b = base_df.get(ngram).copied().unwrap_or(0);
        let p_value = fisher_one_sided(u64::from(g), n_gist - u64::from(g), u64::from(b), n_base - u64::from(b))?;
        tested.push(TermCandidate {
            ngram: ngram.to_string(),
            gist_df: g,
            baseline_df: b,
            p_value,
        });
    }
    tested.sort_by(significance_order);
    let significant = tested.iter().filter(|t| t.p_value < cfg.alpha);
    let unigrams = significant.clone().filter(|t| t.order() == 1).take(cfg.top_unigrams);
    let bigrams = significant.filter(|t| t.order() == 2).take(cfg.top_bigrams);
    let selected = unigrams.chain(bigrams).cloned().collect();
    Ok(CandidateTerms { tested, selected })
}

/// Search terms: selected n-grams followed by the primary keyword, deduplicated.
pub fn search_terms(candidates: &CandidateTerms, primary: &str) -> Vec<String> {
    let mut terms: Vec<String> = candidates.selected.iter().map(|t| t.ngram.clone()).collect();
    let primary = phrase_tokens(primary).join(" ");
    if !primary.is_empty() && !terms.contains(&primary) {
        terms.push(primary);
    }
    terms
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TermDrop {
    TooFewArticles,
    IncoherentBodies,
    NoTitlePartner,
}

/// News-linkage outcome for one search term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermLinkage {
    pub term: String,
    /// Store indices, best first.
    pub articles: Vec<usize>,
    pub body_pcss: Option<f64>,
    pub best_title_pcss: Option<f64>,
    pub partner: Option<String>,
    pub good: bool,
    pub dropped: Option<TermDrop>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NewsLinkage {
    pub terms: Vec<TermLinkage>,
}

impl NewsLinkage {
    pub fn good_terms(&self) -> Vec<String> {
        self.terms.iter().filter(|t| t.good).map(|t| t.term.clone()).collect()
    }

    /// Articles of good terms, first occurrence order.
    pub fn good_articles(&self) -> Vec<usize> {
        let mut seen = BTreeSet::new();
        self.terms
            .iter()
            .filter(|t| t.good)
            .flat_map(|t| t.articles.iter().copied())
            .filter(|i| seen.insert(*i))
            .collect()
    }
}

fn body_vectors(store: &NewsStore, idxs: &[usize], res: &TextResources) -> Vec<SparseVector> {
    let docs: Vec<TokenDoc> = idxs
        .iter()
        .map(|&i| TokenDoc::new(store.get(i).id.clone(), &store.get(i).body))
        .collect();
    tfidf_vectors(&docs, NgramRange::UNIGRAMS, &res.stopwords, Some(&res.stemmer))
}

/// Title cross-PCSS of two article lists, vectorised together without stemming
/// over 1- to 3-grams.
pub fn title_cross_pcss(store: &NewsStore, a: &[usize], b: &[usize], res: &TextResources) -> f64 {
    let docs: Vec<TokenDoc> = a
        .iter()
        .chain(b)
        .map(|&i| TokenDoc::new(store.get(i).id.clone(), &store.get(i).title))
        .collect();
    let vecs = tfidf_vectors(&docs, NgramRange { min: 1, max: 3 }, &res.stopwords, None);
    let (va, vb) = vecs.split_at(a.len());
    cross_pcss(va, vb).unwrap_or(0.0)
}

/// PCSS-gated news linkage for each search term over `range`.
pub fn select_good_terms(
    terms: &[String],
    store: &NewsStore,
    range: DateRange,
    res: &TextResources,
    cfg: &TntConfig,
) -> NewsLinkage {
    let mut linkage: Vec<TermLinkage> = terms
        .iter()
        .map(|term| {
            let articles = store.search_indices(term, range, cfg.search_k);
            let body_pcss = if articles.len() >= 2 {
                pcss(&body_vectors(store, &articles, res)).ok()
            } else {
                None
            };
            let dropped = match body_pcss {
                None => Some(TermDrop::TooFewArticles),
                Some(s) if s <= cfg.pcss_threshold => Some(TermDrop::IncoherentBodies),
                Some(_) => None,
            };
            TermLinkage {
                term: term.clone(),
                articles,
                body_pcss,
                best_title_pcss: None,
                partner: None,
                good: false,
                dropped,
            }
        })
        .collect();

    let survivors: Vec<usize> = (0..linkage.len()).filter(|&i| linkage[i].dropped.is_none()).collect();
    for &i in &survivors {
        let mut best: Option<(f64, usize)> = None;
        for &j in survivors.iter().filter(|&&j| j != i) {
            let score = title_cross_pcss(store, &linkage[i].articles, &linkage[j].articles, res);
            if best.is_none_or(|(s, _)| score > s) {
                best = Some((score, j));
            }
        }
        let good = best.is_some_and(|(s, _)| s > cfg.pcss_threshold);
        let partner = best.map(|(_, j)| linkage[j].term.clone());
        let t = &mut linkage[i];
        t.best_title_pcss = best.map(|(s, _)| s);
        t.partner = partner;
        t.good = good;
        if !good {
            t.dropped = Some(TermDrop::NoTitlePartner);
        }
    }
    NewsLinkage { terms: linkage }
}

/// Top `k` items by cosine similarity to the mean vector; ties by id.
pub fn rank_by_centroid<S: AsRef<str>>(items: &[SparseVector], ids: &[S], k: usize) -> Vec<(usize, f64)> {
    assert_eq!(items.len(), ids.len(), "one id per item");
    let mean = centroid(items);
    let mut scored: Vec<(usize, f64)> = items.iter().map(|v| cosine(v, &mean)).enumerate().collect();
    scored.sort_by(|a, b| {
        b.1.total_cmp(&a.1)
            .then_with(|| ids[a.0].as_ref().cmp(ids[b.0].as_ref()))
    });
    scored.truncate(k);
    scored
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SummaryStatus {
    /// Good news terms found; STT from messages with a good term.
    Full,
    /// Significant terms but no good news terms; STT from messages with a
    /// significant term.
    NoNews,
    /// Significant terms, no news store configured; STT as for `NoNews`.
    TermsOnly,
    /// No significant terms; only the GTT is available.
    GistOnly,
    /// Gist smaller than the minimum; only the GTT is produced.
    TooSmall,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedMessage {
    pub id: String,
    pub score: f64,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedArticle {
    pub id: String,
    pub title: String,
    pub url: Option<String>,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SttSource {
    GoodTerms,
    CandidateTerms,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventSummary {
    pub event_id: String,
    pub keyword: String,
    pub region_label: String,
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
    pub status: SummaryStatus,
    pub gist_size: usize,
    pub baseline_size: usize,
    pub terms: Vec<TermCandidate>,
    pub search_terms: Vec<String>,
    pub linkage: Vec<TermLinkageRecord>,
    pub good_terms: Vec<String>,
    pub articles: Vec<RankedArticle>,
    pub stt_source: Option<SttSource>,
    pub stt: Vec<RankedMessage>,
    pub gtt: Vec<RankedMessage>,
}

/// [`TermLinkage`] with article ids instead of store indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermLinkageRecord {
    pub term: String,
    pub articles: Vec<String>,
    pub body_pcss: Option<f64>,
    pub best_title_pcss: Option<f64>,
    pub partner: Option<String>,
    pub good: bool,
    pub dropped: Option<TermDrop>,
}

fn message_vectors(messages: &[&Message], res: &TextResources) -> Vec<SparseVector> {
    let docs: Vec<TokenDoc> = messages.iter().map(|m| TokenDoc::new(m.id.clone(), &m.text)).collect();
    tfidf_vectors(&docs, NgramRange::UNIGRAMS, &res.stopwords, Some(&res.stemmer))
}

fn rank_messages(messages: &[&Message], res: &TextResources, k: usize) -> Vec<RankedMessage> {
    if messages.is_empty() {
        return Vec::new();
    }
    let vecs = message_vectors(messages, res);
    let ids: Vec<&str> = messages.iter().map(|m| m.id.as_str()).collect();
    rank_by_centroid(&vecs, &ids, k)
        .into_iter()
        .map(|(i, score)| RankedMessage {
            id: messages[i].id.clone(),
            score,
            text: messages[i].text.clone(),
        })
        .collect()
}

/// Messages containing at least one of `terms` as a token sequence.
pub fn messages_with_terms<'a>(messages: &[&'a Message], terms: &[String]) -> Vec<&'a Message> {
    let needles: Vec<Vec<String>> = terms.iter().map(|t| phrase_tokens(t)).collect();
    messages
        .iter()
        .copied()
        .filter(|m| {
            let toks = tokenize(&m.text);
            needles.iter().any(|n| contains_sequence(&toks, n))
        })
        .collect()
}

/// Runs the full summarisation for one event. Aborts surface as statuses.
pub fn summarise(
    event: &Event,
    corpus: &Corpus,
    store: Option<&NewsStore>,
    res: &TextResources,
    cfg: &TntConfig,
) -> EventSummary {
    let alarm = &event.alarm;
    let gist = fetch_gist(corpus, alarm);
    let baseline = fetch_baseline(corpus, alarm, cfg.baseline_days);
    let gtt = rank_messages(&gist, res, cfg.top_k);
    let mut summary = EventSummary {
        event_id: event.id.clone(),
        keyword: event.keyword.clone(),
        region_label: event.region_label.clone(),
        start_date: alarm.start_date,
        end_date: alarm.end_date,
        status: SummaryStatus::TooSmall,
        gist_size: gist.len(),
        baseline_size: baseline.len(),
        terms: Vec::new(),
        search_terms: Vec::new(),
        linkage: Vec::new(),
        good_terms: Vec::new(),
        articles: Vec::new(),
        stt_source: None,
        stt: Vec::new(),
        gtt,
    };
    let candidates = match extract_candidate_terms(&gist, &baseline, &res.stopwords, cfg) {
        Ok(c) => c,
        Err(_) => return summary,
    };
    let extracted: Vec<String> = candidates.selected.iter().map(|t| t.ngram.clone()).collect();
    summary.terms = candidates.selected.clone();
    summary.search_terms = search_terms(&candidates, &event.keyword);

    let mut good = Vec::new();
    if let Some(store) = store {
        let linkage = select_good_terms(&summary.search_terms, store, gist_range(alarm), res, cfg);
        good = linkage.good_terms();
        let good_articles = linkage.good_articles();
        if !good_articles.is_empty() {
            let docs: Vec<TokenDoc> = good_articles
                .iter()
                .map(|&i| TokenDoc::new(store.get(i).id.clone(), &store.get(i).body))
                .collect();
            let vecs = tfidf_vectors(&docs, NgramRange::UNIGRAMS, &res.stopwords, Some(&res.stemmer));
            let ids: Vec<&str> = docs.iter().map(|d| d.id.as_str()).collect();
            summary.articles = rank_by_centroid(&vecs, &ids, cfg.top_k)
                .into_iter()
                .map(|(i, score)| {
                    let a = store.get(good_articles[i]);
                    RankedArticle {
                        id: a.id.clone(),
                        title: a.title.clone(),
                        url: a.url.clone(),
                        score,
                    }
                })
                .collect();
        }
        summary.linkage = linkage
            .terms
            .into_iter()
            .map(|t| TermLinkageRecord {
                articles: t.articles.iter().map(|&i| store.get(i).id.clone()).collect(),
                term: t.term,
                body_pcss: t.body_pcss,
                best_title_pcss: t.best_title_pcss,
                partner: t.partner,
                good: t.good,
                dropped: t.dropped,
            })
            .collect();
    }

    let (status, filter, source) = match (good.is_empty(), extracted.is_empty(), store.is_some()) {
        (false, _, _) => (SummaryStatus::Full, good.clone(), Some(SttSource::GoodTerms)),
        (true, true, _) => (SummaryStatus::GistOnly, Vec::new(), None),
        (true, false, true) => (SummaryStatus::NoNews, extracted, Some(SttSource::CandidateTerms)),
        (true, false, false) => (SummaryStatus::TermsOnly, extracted, Some(SttSource::CandidateTerms)),
    };
    summary.status = status;
    summary.good_terms = good;
    summary.stt_source = source;
    if !filter.is_empty() {
        let filtered = messages_with_terms(&gist, &filter);
        summary.stt = rank_messages(&filtered, res, cfg.top_k);
    }
    summary
}

/// Stable JSON key order for a summary's candidate listing.
pub fn tested_terms_by_ngram(c: &CandidateTerms) -> BTreeMap<&str, &TermCandidate> {
    c.tested.iter().map(|t| (t.ngram.as_str(), t)).collect()
}
