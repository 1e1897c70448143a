//! Message parsing, keyword-group matching, the optional linear noise filter,
//! region assignment and daily count series.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::BufRead;

use chrono::{DateTime, Days, NaiveDate, NaiveDateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{GeoPoint, RegionIndex, Zone};
use crate::par;
use crate::textvec::{contains_sequence, phrase_tokens, tokenize};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("invalid keyword group {index}: {reason}")]
    BadGroup { index: usize, reason: String },
    #[error("invalid noise model: {0}")]
    BadNoiseModel(String),
    #[error("empty date range {0}..={1}")]
    EmptyRange(NaiveDate, NaiveDate),
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub id: String,
    pub user_id: String,
    pub timestamp: DateTime<Utc>,
    pub point: GeoPoint,
    pub text: String,
}

impl Message {
    pub fn date(&self) -> NaiveDate {
        self.timestamp.date_naive()
    }
}

/// One wire record of the messages file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MessageRecord {
    pub id: String,
    pub user_id: String,
    pub created_at: String,
    pub lat: f64,
    pub lon: f64,
    pub text: String,
    #[serde(default)]
    pub retweet: bool,
}

impl From<&Message> for MessageRecord {
    fn from(m: &Message) -> Self {
        Self {
            id: m.id.clone(),
            user_id: m.user_id.clone(),
            created_at: m.timestamp.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            lat: m.point.lat,
            lon: m.point.lon,
            text: m.text.clone(),
            retweet: false,
        }
    }
}

/// ISO-8601 instant; a missing offset is read as UTC.
pub fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.with_timezone(&Utc));
    }
    ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"]
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
        .map(|n| n.and_utc())
}

impl MessageRecord {
    pub fn validate(self) -> Result<Message, String> {
        if self.retweet {
            return Err("retweet".into());
        }
        if self.id.is_empty() {
            return Err("empty id".into());
        }
        if self.user_id.is_empty() {
            return Err("empty user_id".into());
        }
        if !(self.lat.is_finite() && (-90.0..=90.0).contains(&self.lat)) {
            return Err("lat out of range".into());
        }
        if !(self.lon.is_finite() && (-180.0..=180.0).contains(&self.lon)) {
            return Err("lon out of range".into());
        }
        if self.text.trim().is_empty() {
            return Err("empty text".into());
        }
        let timestamp =
            parse_timestamp(&self.created_at).ok_or_else(|| format!("unparseable timestamp {:?}", self.created_at))?;
        Ok(Message {
            id: self.id,
            user_id: self.user_id,
            timestamp,
            point: GeoPoint {
                lat: self.lat,
                lon: self.lon,
            },
            text: self.text,
        })
    }
}

/// A line that did not produce a record. `line` is 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reject {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Default)]
pub struct ParsedMessages {
    pub messages: Vec<Message>,
    pub rejects: Vec<Reject>,
}

/// Reads a messages file line by line. Malformed lines become rejects; only
/// read failures are fatal. Blank lines are skipped.
pub fn parse_messages<R: BufRead>(mut input: R) -> Result<ParsedMessages, IngestError> {
    let mut out = ParsedMessages::default();
    let mut buf = String::new();
    let mut line = 0;
    loop {
        buf.clear();
        if input.read_line(&mut buf)? == 0 {
            break;
        }
        line += 1;
        let text = buf.trim();
        if text.is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<MessageRecord>(text)
            .map_err(|e| format!("malformed record: {e}"))
            .and_then(MessageRecord::validate);
        match parsed {
            Ok(m) => out.messages.push(m),
            Err(reason) => out.rejects.push(Reject { line, reason }),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventClass {
    Symptom,
    Emotion,
}

/// A tracked signal: a primary keyword plus aliases.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordGroup {
    pub class: EventClass,
    pub primary: String,
    #[serde(default)]
    pub aliases: Vec<String>,
}

/// Position of a group in the groups file.
pub type GroupId = usize;

impl KeywordGroup {
    pub fn new(class: EventClass, primary: &str, aliases: &[&str]) -> Self {
        Self {
            class,
            primary: primary.to_string(),
            aliases: aliases.iter().map(|a| a.to_string()).collect(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if phrase_tokens(&self.primary).is_empty() {
            return Err("primary keyword is empty".into());
        }
        let mut seen = HashSet::from([self.primary.to_lowercase()]);
        for alias in &self.aliases {
            if phrase_tokens(alias).is_empty() {
                return Err("empty alias".into());
            }
            if !seen.insert(alias.to_lowercase()) {
                return Err(format!("alias {alias:?} repeats the primary or another alias"));
            }
        }
        Ok(())
    }

    /// Primary first, then aliases.
    pub fn phrases(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.primary.as_str()).chain(self.aliases.iter().map(String::as_str))
    }
}

/// Keyword groups file: a JSON array of groups.
pub fn parse_groups(json: &str) -> Result<Vec<KeywordGroup>, IngestError> {
    let groups: Vec<KeywordGroup> = serde_json::from_str(json)?;
    for (index, g) in groups.iter().enumerate() {
        g.validate().map_err(|reason| IngestError::BadGroup { index, reason })?;
    }
    Ok(groups)
}

/// Whole-token phrase matcher over a fixed list of groups.
#[derive(Debug, Clone)]
pub struct KeywordMatcher {
    by_first: HashMap<String, Vec<(GroupId, Vec<String>)>>,
    groups: usize,
}

impl KeywordMatcher {
    pub fn new(groups: &[KeywordGroup]) -> Self {
        let mut by_first: HashMap<String, Vec<(GroupId, Vec<String>)>> = HashMap::new();
        for (gid, g) in groups.iter().enumerate() {
            for phrase in g.phrases() {
                let toks = phrase_tokens(phrase);
                if let Some(first) = toks.first() {
                    by_first.entry(first.clone()).or_default().push((gid, toks));
                }
            }
        }
        Self {
            by_first,
            groups: groups.len(),
        }
    }

    pub fn group_count(&self) -> usize {
        self.groups
    }

    /// Matching groups in ascending id order.
    pub fn matches(&self, text: &str) -> Vec<GroupId> {
        let toks = phrase_tokens(text);
        let mut hit = BTreeSet::new();
        for (i, t) in toks.iter().enumerate() {
            if let Some(cands) = self.by_first.get(t) {
                for (gid, phrase) in cands {
                    if toks[i..].starts_with(phrase) {
                        hit.insert(*gid);
                    }
                }
            }
        }
        hit.into_iter().collect()
    }
}

pub fn match_keywords(m: &Message, groups: &[KeywordGroup]) -> BTreeSet<GroupId> {
    let toks = phrase_tokens(&m.text);
    groups
        .iter()
        .enumerate()
        .filter(|(_, g)| g.phrases().any(|p| contains_sequence(&toks, &phrase_tokens(p))))
        .map(|(gid, _)| gid)
        .collect()
}

/// Supplied linear text classifier: keep iff
/// `bias + Σ weights[token] >= threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearNoiseModel {
    #[serde(rename = "weights")]
    pub term_weights: HashMap<String, f64>,
    pub bias: f64,
    pub threshold: f64,
}

impl LinearNoiseModel {
    pub fn parse(json: &str) -> Result<Self, IngestError> {
        let model: Self = serde_json::from_str(json)?;
        if !model.bias.is_finite() || !model.threshold.is_finite() {
            return Err(IngestError::BadNoiseModel("bias and threshold must be finite".into()));
        }
        if let Some((t, _)) = model.term_weights.iter().find(|(_, w)| !w.is_finite()) {
            return Err(IngestError::BadNoiseModel(format!("weight for {t:?} is not finite")));
        }
        Ok(model)
    }

    pub fn score(&self, text: &str) -> f64 {
        // Summed in token order so the result is reproducible.
        self.bias
            + tokenize(text)
                .iter()
                .filter_map(|t| self.term_weights.get(t))
                .sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseDecision {
    Keep,
    Drop,
}

pub fn apply_noise_filter(m: &Message, model: Option<&LinearNoiseModel>) -> NoiseDecision {
    match model {
        Some(model) if model.score(&m.text) < model.threshold => NoiseDecision::Drop,
        _ => NoiseDecision::Keep,
    }
}

/// Inclusive UTC date interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateRange {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateRange {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<Self, IngestError> {
        if start > end {
            return Err(IngestError::EmptyRange(start, end));
        }
        Ok(Self { start, end })
    }

    pub fn contains(&self, d: NaiveDate) -> bool {
        self.start <= d && d <= self.end
    }

    pub fn days(&self) -> usize {
        (self.end - self.start).num_days() as usize + 1
    }

    pub fn date_at(&self, offset: usize) -> NaiveDate {
        self.start + Days::new(offset as u64)
    }

    pub fn offset_of(&self, d: NaiveDate) -> Option<usize> {
        self.contains(d).then(|| (d - self.start).num_days() as usize)
    }

    /// Smallest range covering every message, if any.
    pub fn covering(messages: &[Message]) -> Option<Self> {
        let start = messages.iter().map(Message::date).min()?;
        let end = messages.iter().map(Message::date).max()?;
        Some(Self { start, end })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DayCount {
    pub raw_count: u64,
    pub user_count: u64,
    pub normalized_count: f64,
}

/// Contiguous daily counts for one `(group, region)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountSeries {
    pub group: GroupId,
    pub region: u32,
    pub start: NaiveDate,
    pub entries: Vec<DayCount>,
}

impl CountSeries {
    pub fn zeros(group: GroupId, region: u32, range: DateRange) -> Self {
        Self {
            group,
            region,
            start: range.start,
            entries: vec![DayCount::default(); range.days()],
        }
    }

    pub fn date_at(&self, offset: usize) -> NaiveDate {
        self.start + Days::new(offset as u64)
    }

    pub fn offset_of(&self, d: NaiveDate) -> Option<usize> {
        let off = (d - self.start).num_days();
        (off >= 0 && (off as usize) < self.entries.len()).then_some(off as usize)
    }

    pub fn raw(&self) -> Vec<u64> {
        self.entries.iter().map(|e| e.raw_count).collect()
    }

    pub fn normalized(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.normalized_count).collect()
    }
}

/// A message that survived filtering and matched at least one group.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessedMessage {
    pub message: Message,
    pub region: u32,
    pub groups: Vec<GroupId>,
}

/// Everything ingestion produces: kept matched messages (indexed per series),
/// global daily message volume, and rejects.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    messages: Vec<ProcessedMessage>,
    by_series: BTreeMap<(GroupId, u32), Vec<usize>>,
    daily_totals: BTreeMap<NaiveDate, u64>,
    noise_region: u64,
    dropped_by_filter: u64,
}

impl Corpus {
    pub fn messages(&self) -> &[ProcessedMessage] {
        &self.messages
    }

    /// Messages of one series, ordered by (timestamp, input order).
    pub fn series_messages(&self, group: GroupId, region: u32) -> impl Iterator<Item = &ProcessedMessage> {
        self.by_series
            .get(&(group, region))
            .into_iter()
            .flatten()
            .map(|&i| &self.messages[i])
    }

    /// Series messages with date in `range`.
    pub fn messages_in(&self, group: GroupId, region: u32, range: DateRange) -> Vec<&ProcessedMessage> {
        self.series_messages(group, region)
            .filter(|m| range.contains(m.message.date()))
            .collect()
    }

    /// All parsed messages per UTC day, regardless of match or filter.
    pub fn daily_totals(&self) -> &BTreeMap<NaiveDate, u64> {
        &self.daily_totals
    }

    pub fn noise_region_count(&self) -> u64 {
        self.noise_region
    }

    pub fn dropped_by_filter(&self) -> u64 {
        self.dropped_by_filter
    }

    pub fn series_keys(&self) -> impl Iterator<Item = (GroupId, u32)> + '_ {
        self.by_series.keys().copied()
    }
}

/// Matching, filtering and region assignment bound to one configuration.
#[derive(Debug, Clone)]
pub struct Ingestor<'a> {
    matcher: KeywordMatcher,
    regions: &'a RegionIndex,
    model: Option<&'a LinearNoiseModel>,
}

const CHUNK: usize = 8192;

impl<'a> Ingestor<'a> {
    pub fn new(groups: &[KeywordGroup], regions: &'a RegionIndex, model: Option<&'a LinearNoiseModel>) -> Self {
        Self {
            matcher: KeywordMatcher::new(groups),
            regions,
            model,
        }
    }

    fn classify(&self, m: &Message) -> Outcome {
        let groups = self.matcher.matches(&m.text);
        if groups.is_empty() {
            return Outcome::Unmatched;
        }
        if apply_noise_filter(m, self.model) == NoiseDecision::Drop {
            return Outcome::Filtered;
        }
        match self.regions.assign(&m.point) {
            Zone::Region(region) => Outcome::Kept { region, groups },
            Zone::Noise => Outcome::NoiseZone,
        }
    }

    /// Builds the corpus. Output is independent of how work is split.
    pub fn process(&self, messages: Vec<Message>) -> Corpus {
        let chunks: Vec<&[Message]> = messages.chunks(CHUNK).collect();
        let outcomes: Vec<Vec<Outcome>> = par::map(&chunks, |chunk| chunk.iter().map(|m| self.classify(m)).collect());

        let mut corpus = Corpus::default();
        for (m, outcome) in messages.into_iter().zip(outcomes.into_iter().flatten()) {
            *corpus.daily_totals.entry(m.date()).or_default() += 1;
            match outcome {
                Outcome::Kept { region, groups } => corpus.messages.push(ProcessedMessage {
                    message: m,
                    region,
                    groups,
                }),
                Outcome::Filtered => corpus.dropped_by_filter += 1,
                Outcome::NoiseZone => corpus.noise_region += 1,
                Outcome::Unmatched => {}
            }
        }
        // Stable sort keeps input order among equal timestamps.
        let mut order: Vec<usize> = (0..corpus.messages.len()).collect();
        order.sort_by_key(|&i| corpus.messages[i].message.timestamp);
        for i in order {
            let pm = &corpus.messages[i];
            for &g in &pm.groups {
                corpus.by_series.entry((g, pm.region)).or_default().push(i);
            }
        }
        corpus
    }
}

enum Outcome {
    Kept { region: u32, groups: Vec<GroupId> },
    Filtered,
    NoiseZone,
    Unmatched,
}

/// Daily series for every `(group, region)` with at least one match in range,
/// plus the global daily totals. Missing series read as all zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct CountTable {
    pub range: DateRange,
    pub totals: Vec<u64>,
    pub series: BTreeMap<(GroupId, u32), CountSeries>,
}

impl CountTable {
    pub fn get(&self, group: GroupId, region: u32) -> CountSeries {
        self.series
            .get(&(group, region))
            .cloned()
            .unwrap_or_else(|| CountSeries::zeros(group, region, self.range))
    }
}

impl Corpus {
    pub fn count_series(&self, range: DateRange) -> CountTable {
        let days = range.days();
        let mut totals = vec![0; days];
        for (d, n) in self.daily_totals.range(range.start..=range.end) {
            totals[range.offset_of(*d).expect("in range")] = *n;
        }
        let mut series = BTreeMap::new();
        for (&(group, region), idxs) in &self.by_series {
            let mut raw = vec![0u64; days];
            let mut users: Vec<HashSet<&str>> = vec![HashSet::new(); days];
            for &i in idxs {
                let m = &self.messages[i].message;
                if let Some(off) = range.offset_of(m.date()) {
                    raw[off] += 1;
                    users[off].insert(m.user_id.as_str());
                }
            }
            if raw.iter().all(|&c| c == 0) {
                continue;
            }
            let entries = raw
                .iter()
                .zip(&users)
                .map(|(&r, u)| DayCount {
                    raw_count: r,
                    user_count: u.len() as u64,
                    normalized_count: r as f64,
                })
                .collect();
            series.insert(
                (group, region),
                CountSeries {
                    group,
                    region,
                    start: range.start,
                    entries,
                },
            );
        }
        CountTable { range, totals, series }
    }
}

/// One-shot form: process `messages` and count them over `range`.
pub fn build_count_series(
    messages: Vec<Message>,
    regions: &RegionIndex,
    groups: &[KeywordGroup],
    model: Option<&LinearNoiseModel>,
    range: DateRange,
) -> CountTable {
    Ingestor::new(groups, regions, model)
        .process(messages)
        .count_series(range)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::{convex_hull, ClusterRegion};

    fn msg(id: &str, user: &str, ts: &str, text: &str) -> Message {
        Message {
            id: id.into(),
            user_id: user.into(),
            timestamp: parse_timestamp(ts).unwrap(),
            point: GeoPoint { lat: 51.5, lon: -0.1 },
            text: text.into(),
        }
    }

    fn london() -> RegionIndex {
        let hull = convex_hull(&[
            GeoPoint { lat: 51.0, lon: -1.0 },
            GeoPoint { lat: 52.0, lon: -1.0 },
            GeoPoint { lat: 52.0, lon: 1.0 },
            GeoPoint { lat: 51.0, lon: 1.0 },
        ])
        .unwrap();
        RegionIndex::new(&[ClusterRegion::new(1, "L", hull).unwrap()])
    }

    fn flu() -> KeywordGroup {
        KeywordGroup::new(EventClass::Symptom, "flu", &["influenza"])
    }

    #[test]
    fn parse_valid_and_rejects() {
        let input = concat!(
            r#"{"id":"1","user_id":"u","created_at":"2014-08-11T10:00:00Z","lat":51.5,"lon":-0.1,"text":"hi","retweet":false}"#,
            "\n",
            r#"{"id":"2","user_id":"u","created_at":"2014-08-11T10:00:00Z","lat":95,"lon":-0.1,"text":"hi","retweet":false}"#,
            "\n",
            r#"{"id":"3","user_id":"u","created_at":"2014-08-11T10:00:00Z","lat":51.5,"lon":-0.1,"text":"hi","retweet":true}"#,
            "\n\n",
            "not json\n",
            r#"{"id":"5","user_id":"u","created_at":"yesterday","lat":51.5,"lon":-0.1,"text":"hi"}"#,
            "\n",
        );
        let parsed = parse_messages(input.as_bytes()).unwrap();
        assert_eq!(parsed.messages.len(), 1);
        assert_eq!(parsed.messages[0].id, "1");
        let reasons: Vec<_> = parsed.rejects.iter().map(|r| (r.line, r.reason.as_str())).collect();
        assert_eq!(reasons[0], (2, "lat out of range"));
        assert_eq!(reasons[1], (3, "retweet"));
        assert_eq!(reasons[2].0, 5);
        assert!(reasons[2].1.starts_with("malformed record"));
        assert!(reasons[3].1.starts_with("unparseable timestamp"));
    }

    #[test]
    fn keyword_matching() {
        let groups = vec![
            flu(),
            KeywordGroup::new(EventClass::Symptom, "vomit", &["throwing up", "being sick"]),
        ];
        let m = |t: &str| match_keywords(&msg("1", "u", "2014-01-01T00:00:00Z", t), &groups);
        assert_eq!(m("think i have the flu"), BTreeSet::from([0]));
        assert!(m("fluent in french").is_empty());
        assert_eq!(m("throwing up all night"), BTreeSet::from([1]));
        assert_eq!(m("FLU and Throwing-Up"), BTreeSet::from([0, 1]));

        let matcher = KeywordMatcher::new(&groups);
        for t in [
            "think i have the flu",
            "fluent in french",
            "throwing up all night",
            "up throwing",
        ] {
            assert_eq!(matcher.matches(t), m(t).into_iter().collect::<Vec<_>>(), "{t}");
        }
    }

    #[test]
    fn group_validation() {
        assert!(KeywordGroup::new(EventClass::Symptom, "", &[]).validate().is_err());
        assert!(KeywordGroup::new(EventClass::Symptom, "Flu", &["flu"])
            .validate()
            .is_err());
        assert!(KeywordGroup::new(EventClass::Emotion, "joy", &["glee", "Glee"])
            .validate()
            .is_err());
        let groups = parse_groups(r#"[{"class":"emotion","primary":"joy","aliases":["glee"]}]"#).unwrap();
        assert_eq!(groups[0].class, EventClass::Emotion);
        assert!(matches!(
            parse_groups(r#"[{"class":"emotion","primary":"joy","aliases":["joy"]}]"#),
            Err(IngestError::BadGroup { index: 0, .. })
        ));
    }

    #[test]
    fn noise_filter() {
        let m = msg("1", "u", "2014-01-01T00:00:00Z", "sick beat bro");
        assert_eq!(apply_noise_filter(&m, None), NoiseDecision::Keep);
        let model = LinearNoiseModel {
            term_weights: HashMap::from([("sick".to_string(), -1.0)]),
            bias: 0.0,
            threshold: 0.0,
        };
        assert_eq!(apply_noise_filter(&m, Some(&model)), NoiseDecision::Drop);
        let constant = LinearNoiseModel {
            term_weights: HashMap::new(),
            bias: 1.0,
            threshold: 0.0,
        };
        assert_eq!(apply_noise_filter(&m, Some(&constant)), NoiseDecision::Keep);
        assert!(LinearNoiseModel::parse(r#"{"bias":0,"threshold":0,"weights":{"a":1.5}}"#).is_ok());
        assert!(LinearNoiseModel::parse(r#"{"bias":0,"weights":{}}"#).is_err());
    }

    #[test]
    fn counts_and_users() {
        let d = NaiveDate::from_ymd_opt(2014, 1, 2).unwrap();
        let range = DateRange::new(d - Days::new(1), d + Days::new(1)).unwrap();
        let regions = london();
        let groups = vec![flu(), KeywordGroup::new(EventClass::Symptom, "fever", &[])];
        let messages = vec![
            msg("1", "a", "2014-01-02T01:00:00Z", "flu again"),
            msg("2", "a", "2014-01-02T02:00:00Z", "still flu"),
            msg("3", "b", "2014-01-02T23:59:59Z", "flu and fever"),
            msg("4", "c", "2014-01-02T12:00:00Z", "nothing here"),
        ];
        let table = build_count_series(messages, &regions, &groups, None, range);
        let flu_series = table.get(0, 1);
        assert_eq!(flu_series.entries.len(), 3);
        assert_eq!(flu_series.entries[1].raw_count, 3);
        assert_eq!(flu_series.entries[1].user_count, 2);
        assert_eq!(flu_series.entries[0].raw_count, 0);
        assert_eq!(table.get(1, 1).entries[1].raw_count, 1);
        assert_eq!(table.totals, vec![0, 4, 0]);
    }

    #[test]
    fn empty_input_reads_as_zero_series() {
        let d = NaiveDate::from_ymd_opt(2014, 1, 2).unwrap();
        let range = DateRange::new(d, d + Days::new(4)).unwrap();
        let table = build_count_series(vec![], &london(), &[flu()], None, range);
        assert!(table.series.is_empty());
        let s = table.get(0, 1);
        assert_eq!(s.entries.len(), 5);
        assert!(s.entries.iter().all(|e| e.raw_count == 0));
    }

    #[test]
    fn date_range_rejects_inverted() {
        let d = NaiveDate::from_ymd_opt(2014, 1, 2).unwrap();
        assert!(DateRange::new(d, d - Days::new(1)).is_err());
    }
}
