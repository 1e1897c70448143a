//! Seeded synthetic corpus: Poisson daily volumes per (group, region), planted
//! spikes with a marker term, and matching news.
//!
//! Randomness comes from xoshiro256** seeded through SplitMix64
//! (`seed_from_u64`). Uniforms are `(next_u64 >> 11) * 2^-53`; Poisson draws are
//! inverse-CDF by sequential search. Everything is drawn in a fixed order on a
//! single thread, so a seed and config always give the same bytes.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use chrono::{Days, NaiveDate, NaiveTime, TimeDelta};
use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::geo::{write_regions, ClusterRegion, GeoPoint};
use crate::ingest::{KeywordGroup, MessageRecord};
use crate::newsstore::NewsArticle;
use crate::textvec::phrase_tokens;

/// Neutral vocabulary for message and article padding.
pub const FILLER_WORDS: &[&str] = &[
    "morning",
    "train",
    "coffee",
    "office",
    "weekend",
    "park",
    "music",
    "phone",
    "lunch",
    "meeting",
    "garden",
    "bus",
    "station",
    "market",
    "river",
    "bridge",
    "school",
    "library",
    "cinema",
    "match",
    "football",
    "dinner",
    "breakfast",
    "kitchen",
    "window",
    "street",
    "shop",
    "bike",
    "holiday",
    "beach",
    "friends",
    "family",
    "birthday",
    "party",
    "concert",
    "album",
    "game",
    "book",
    "film",
    "show",
    "road",
    "traffic",
    "car",
    "airport",
    "flight",
    "ticket",
    "queue",
    "rain",
    "sunshine",
    "cloud",
    "evening",
    "night",
    "tea",
    "cake",
    "pizza",
    "burger",
    "salad",
    "pasta",
    "bread",
    "cheese",
    "dog",
    "cat",
    "walk",
    "run",
    "gym",
    "yoga",
    "swim",
    "pool",
    "tennis",
    "golf",
    "desk",
    "laptop",
    "email",
    "project",
    "deadline",
    "boss",
    "team",
    "colleague",
    "client",
    "budget",
    "paint",
    "draw",
    "photo",
    "camera",
    "museum",
    "gallery",
    "theatre",
    "stage",
    "song",
    "guitar",
    "piano",
    "drum",
    "dance",
    "club",
    "pub",
    "cafe",
    "hotel",
    "room",
    "city",
    "village",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthRegion {
    pub label: String,
    pub lat: f64,
    pub lon: f64,
    /// Half-width of the square region, in degrees.
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantedEvent {
    /// Region label.
    pub region: String,
    /// Primary keyword of the group.
    pub group: String,
    pub start: NaiveDate,
    pub days: usize,
    /// Event-day volume as a multiple of the baseline mean.
    pub multiplier: f64,
    pub term: String,
    pub articles: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticConfig {
    pub start: NaiveDate,
    pub days: usize,
    pub regions: Vec<SynthRegion>,
    pub groups: Vec<KeywordGroup>,
    /// Mean matched messages per day per (group, region).
    pub baseline_mean: f64,
    /// Mean unmatched messages per day per region.
    #[serde(default)]
    pub background_mean: f64,
    #[serde(default)]
    pub off_topic_articles: usize,
    #[serde(default)]
    pub events: Vec<PlantedEvent>,
    #[serde(default = "default_users")]
    pub users_per_region: u32,
}

fn default_users() -> u32 {
    10_000
}

const MAX_MEAN: f64 = 500.0;

impl SyntheticConfig {
    pub fn end(&self) -> NaiveDate {
        self.start + Days::new(self.days.saturating_sub(1) as u64)
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        let mut errs = Vec::new();
        if self.days == 0 {
            errs.push("days: must be at least 1".to_string());
        }
        if self.regions.is_empty() {
            errs.push("regions: at least one region is required".into());
        }
        let mut labels = HashSet::new();
        for (i, r) in self.regions.iter().enumerate() {
            if r.label.is_empty() || !labels.insert(r.label.as_str()) {
                errs.push(format!("regions[{i}].label: empty or repeated"));
            }
            if !(r.radius > 0.0) {
                errs.push(format!("regions[{i}].radius: must be positive"));
            }
            let corner_ok = GeoPoint::new(r.lat - r.radius, r.lon - r.radius).is_some()
                && GeoPoint::new(r.lat + r.radius, r.lon + r.radius).is_some();
            if !corner_ok {
                errs.push(format!("regions[{i}]: square leaves the coordinate range"));
            }
        }
        if self.groups.is_empty() {
            errs.push("groups: at least one group is required".into());
        }
        let filler: HashSet<&str> = FILLER_WORDS.iter().copied().collect();
        for (i, g) in self.groups.iter().enumerate() {
            if let Err(e) = g.validate() {
                errs.push(format!("groups[{i}]: {e}"));
            }
            for p in g.phrases() {
                if phrase_tokens(p).iter().any(|t| filler.contains(t.as_str())) {
                    errs.push(format!("groups[{i}]: phrase {p:?} uses a filler word"));
                }
            }
        }
        for (name, m) in [
            ("baseline_mean", self.baseline_mean),
            ("background_mean", self.background_mean),
        ] {
            if !(0.0..=MAX_MEAN).contains(&m) {
                errs.push(format!("{name}: must be within [0, {MAX_MEAN}]"));
            }
        }
        if self.users_per_region == 0 {
            errs.push("users_per_region: must be at least 1".into());
        }
        for (i, e) in self.events.iter().enumerate() {
            if !labels.contains(e.region.as_str()) {
                errs.push(format!("events[{i}].region: unknown label {:?}", e.region));
            }
            if !self.groups.iter().any(|g| g.primary == e.group) {
                errs.push(format!("events[{i}].group: unknown primary keyword {:?}", e.group));
            }
            if e.days == 0 {
                errs.push(format!("events[{i}].days: must be at least 1"));
            } else if e.start < self.start || e.start + Days::new(e.days as u64 - 1) > self.end() {
                errs.push(format!("events[{i}]: window leaves the corpus date range"));
            }
            if !(e.multiplier >= 0.0) || e.baseline_extra(self.baseline_mean) > MAX_MEAN * 10.0 {
                errs.push(format!("events[{i}].multiplier: must be non-negative and moderate"));
            }
            let toks = phrase_tokens(&e.term);
            if toks.is_empty() {
                errs.push(format!("events[{i}].term: empty"));
            }
            let clashes = toks.iter().any(|t| {
                filler.contains(t.as_str())
                    || self
                        .groups
                        .iter()
                        .flat_map(|g| g.phrases())
                        .any(|p| phrase_tokens(p).contains(t))
            });
            if clashes {
                errs.push(format!("events[{i}].term: overlaps filler or keyword vocabulary"));
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(EvalError::InvalidConfig(errs))
        }
    }
}

impl PlantedEvent {
    /// Planted messages added per event day.
    fn baseline_extra(&self, mean: f64) -> f64 {
        (mean * (self.multiplier - 1.0)).max(0.0).round()
    }
}

/// One planted spike as written to the ground-truth file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthEvent {
    pub group: String,
    pub group_index: usize,
    pub region: String,
    pub region_id: u32,
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub term: String,
    pub planted_per_day: u64,
    pub articles: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub messages: Vec<MessageRecord>,
    pub articles: Vec<NewsArticle>,
    pub truth: Vec<TruthEvent>,
    pub regions: Vec<ClusterRegion>,
    pub groups: Vec<KeywordGroup>,
}

struct Rng(Xoshiro256StarStar);

impl Rng {
    fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn below(&mut self, n: usize) -> usize {
        ((self.uniform() * n as f64) as usize).min(n - 1)
    }

    fn poisson(&mut self, mean: f64) -> u64 {
        if mean <= 0.0 {
            return 0;
        }
        let u = self.uniform();
        let mut k = 0u64;
        let mut p = (-mean).exp();
        let mut cdf = p;
        while u > cdf && p > 0.0 {
            k += 1;
            p *= mean / k as f64;
            cdf += p;
        }
        k
    }

    /// `lo` to `lo + spread - 1` filler words.
    fn words_between(&mut self, lo: usize, spread: usize) -> Vec<&'static str> {
        let n = lo + self.below(spread);
        self.words(n)
    }

    fn words(&mut self, n: usize) -> Vec<&'static str> {
        (0..n).map(|_| FILLER_WORDS[self.below(FILLER_WORDS.len())]).collect()
    }
}

fn capitalise(s: &str) -> String {
    let mut c = s.chars();
    c.next()
        .map(|f| f.to_uppercase().chain(c).collect())
        .unwrap_or_default()
}

/// Generates the corpus. Identical seed and config give identical output.
pub fn gen_synthetic(cfg: &SyntheticConfig, seed: u64) -> Result<SyntheticCorpus, EvalError> {
    cfg.validate()?;
    let mut rng = Rng(Xoshiro256StarStar::seed_from_u64(seed));
    let regions: Vec<ClusterRegion> = cfg
        .regions
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let corner = |dlat: f64, dlon: f64| GeoPoint {
                lat: r.lat + dlat * r.radius,
                lon: r.lon + dlon * r.radius,
            };
            let hull = vec![
                corner(-1.0, -1.0),
                corner(-1.0, 1.0),
                corner(1.0, 1.0),
                corner(1.0, -1.0),
            ];
            ClusterRegion::new(i as u32, r.label.clone(), hull).expect("square hull")
        })
        .collect();

    let mut drafts: Vec<(i64, MessageRecord)> = Vec::new();
    let mut planted_users = 0u64;
    let mut emit = |rng: &mut Rng, day: NaiveDate, region: usize, user: String, text: String| {
        let r = &cfg.regions[region];
        let lat = r.lat + (rng.uniform() * 1.8 - 0.9) * r.radius;
        let lon = r.lon + (rng.uniform() * 1.8 - 0.9) * r.radius;
        let secs = rng.below(86_400) as i64;
        let ts = day.and_time(NaiveTime::MIN).and_utc() + TimeDelta::seconds(secs);
        drafts.push((
            ts.timestamp(),
            MessageRecord {
                id: String::new(),
                user_id: user,
                created_at: ts.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
                lat,
                lon,
                text,
                retweet: false,
            },
        ));
    };

    for d in 0..cfg.days {
        let day = cfg.start + Days::new(d as u64);
        for (ri, region) in cfg.regions.iter().enumerate() {
            for g in &cfg.groups {
                let phrases: Vec<&str> = g.phrases().collect();
                let n = rng.poisson(cfg.baseline_mean);
                for _ in 0..n {
                    let phrase = phrases[rng.below(phrases.len())].to_lowercase();
                    let pad = rng.words_between(2, 4).join(" ");
                    let user = format!("u{}-{}", region.label, rng.below(cfg.users_per_region as usize));
                    emit(&mut rng, day, ri, user, format!("{phrase} {pad}"));
                }
                for e in cfg
                    .events
                    .iter()
                    .filter(|e| e.group == g.primary && e.region == region.label)
                {
                    let end = e.start + Days::new(e.days as u64 - 1);
                    if day < e.start || day > end {
                        continue;
                    }
                    for _ in 0..e.baseline_extra(cfg.baseline_mean) as u64 {
                        let phrase = phrases[rng.below(phrases.len())].to_lowercase();
                        let pad = rng.words_between(1, 3).join(" ");
                        planted_users += 1;
                        let text = format!("{phrase} {} {pad}", e.term.to_lowercase());
                        emit(&mut rng, day, ri, format!("p{planted_users}"), text);
                    }
                }
            }
            for _ in 0..rng.poisson(cfg.background_mean) {
                let text = rng.words_between(3, 5).join(" ");
                let user = format!("u{}-{}", region.label, rng.below(cfg.users_per_region as usize));
                emit(&mut rng, day, ri, user, text);
            }
        }
    }
    drafts.sort_by_key(|(ts, _)| *ts);
    let messages: Vec<MessageRecord> = drafts
        .into_iter()
        .enumerate()
        .map(|(i, (_, mut m))| {
            m.id = format!("s{i:08}");
            m
        })
        .collect();

    let mut articles = Vec::new();
    let mut truth = Vec::new();
    for (ei, e) in cfg.events.iter().enumerate() {
        let ri = cfg.regions.iter().position(|r| r.label == e.region).expect("validated");
        let gi = cfg.groups.iter().position(|g| g.primary == e.group).expect("validated");
        let primary = cfg.groups[gi].primary.to_lowercase();
        let term = e.term.to_lowercase();
        let mut ids = Vec::new();
        for a in 0..e.articles {
            let id = format!("n-planted-{ei}-{a}");
            let body = format!(
                "{term} {primary} {} {term} {primary} {} {term}",
                rng.words(10).join(" "),
                rng.words(10).join(" ")
            );
            articles.push(NewsArticle {
                id: id.clone(),
                title: format!(
                    "{} {primary} cases {} {}",
                    capitalise(&term),
                    e.region,
                    rng.words(2).join(" ")
                ),
                body,
                published: e.start + Days::new((a % e.days) as u64),
                url: Some(format!("https://news.example/{id}")),
            });
            ids.push(id);
        }
        if e.multiplier > 1.0 {
            truth.push(TruthEvent {
                group: cfg.groups[gi].primary.clone(),
                group_index: gi,
                region: e.region.clone(),
                region_id: ri as u32,
                start: e.start,
                end: e.start + Days::new(e.days as u64 - 1),
                term: e.term.clone(),
                planted_per_day: e.baseline_extra(cfg.baseline_mean) as u64,
                articles: ids,
            });
        }
    }
    for a in 0..cfg.off_topic_articles {
        let id = format!("n-other-{a}");
        articles.push(NewsArticle {
            id: id.clone(),
            title: capitalise(&rng.words(4).join(" ")),
            body: rng.words(25).join(" "),
            published: cfg.start + Days::new(rng.below(cfg.days) as u64),
            url: Some(format!("https://news.example/{id}")),
        });
    }
    Ok(SyntheticCorpus {
        messages,
        articles,
        truth,
        regions,
        groups: cfg.groups.clone(),
    })
}

fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), EvalError> {
    let mut w = BufWriter::new(File::create(path)?);
    for r in rows {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

impl SyntheticCorpus {
    pub const MESSAGES: &'static str = "messages.jsonl";
    pub const NEWS: &'static str = "news.jsonl";
    pub const TRUTH: &'static str = "truth.jsonl";
    pub const REGIONS: &'static str = "regions.jsonl";
    pub const GROUPS: &'static str = "groups.json";

    /// Writes the five corpus files into `dir`, which must exist.
    pub fn write_to(&self, dir: &Path) -> Result<(), EvalError> {
        write_jsonl(&dir.join(Self::MESSAGES), &self.messages)?;
        write_jsonl(&dir.join(Self::NEWS), &self.articles)?;
        write_jsonl(&dir.join(Self::TRUTH), &self.truth)?;
        let mut w = BufWriter::new(File::create(dir.join(Self::REGIONS))?);
        write_regions(&mut w, &self.regions)?;
        w.flush()?;
        let mut g = serde_json::to_string_pretty(&self.groups)?;
        g.push('\n');
        std::fs::write(dir.join(Self::GROUPS), g)?;
        Ok(())
    }

    /// Messages as validated domain values.
    pub fn domain_messages(&self) -> Vec<crate::ingest::Message> {
        self.messages
            .iter()
            .map(|r| r.clone().validate().expect("generated records are valid"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::EventClass;

    pub(crate) fn config(multiplier: f64) -> SyntheticConfig {
        let start = NaiveDate::from_ymd_opt(2014, 3, 1).unwrap();
        SyntheticConfig {
            start,
            days: 60,
            regions: vec![SynthRegion {
                label: "L".into(),
                lat: 51.5,
                lon: -0.1,
                radius: 0.2,
            }],
            groups: vec![KeywordGroup::new(EventClass::Symptom, "vomit", &["vomiting"])],
            baseline_mean: 5.0,
            background_mean: 20.0,
            off_topic_articles: 20,
            events: vec![PlantedEvent {
                region: "L".into(),
                group: "vomit".into(),
                start: start + Days::new(45),
                days: 3,
                multiplier,
                term: "chocolate".into(),
                articles: 5,
            }],
            users_per_region: 10_000,
        }
    }

    #[test]
    fn deterministic() {
        let a = gen_synthetic(&config(10.0), 7).unwrap();
        let b = gen_synthetic(&config(10.0), 7).unwrap();
        assert_eq!(a, b);
        let c = gen_synthetic(&config(10.0), 8).unwrap();
        assert_ne!(a.messages, c.messages);
    }

    #[test]
    fn planted_days_carry_the_term() {
        let corpus = gen_synthetic(&config(10.0), 1).unwrap();
        let t = &corpus.truth[0];
        assert_eq!(t.planted_per_day, 45);
        let mut day = t.start;
        while day <= t.end {
            let n = corpus
                .messages
                .iter()
                .filter(|m| m.created_at.starts_with(&day.to_string()) && m.text.contains("chocolate"))
                .count();
            assert!(n >= 30, "{day}: {n}");
            day = day + Days::new(1);
        }
        assert_eq!(t.articles.len(), 5);
        assert_eq!(corpus.articles.len(), 25);
    }

    #[test]
    fn no_spike_no_truth() {
        let corpus = gen_synthetic(&config(1.0), 1).unwrap();
        assert!(corpus.truth.is_empty());
        assert!(corpus.messages.iter().all(|m| !m.text.contains("chocolate")));
    }

    #[test]
    fn invalid_config_lists_fields() {
        let mut cfg = config(10.0);
        cfg.days = 0;
        cfg.events[0].region = "X".into();
        cfg.events[0].term = "coffee".into();
        match gen_synthetic(&cfg, 0) {
            Err(EvalError::InvalidConfig(errs)) => {
                assert!(errs.iter().any(|e| e.starts_with("days")));
                assert!(errs.iter().any(|e| e.contains("events[0].region")));
                assert!(errs.iter().any(|e| e.contains("events[0].term")));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn poisson_mean() {
        let mut rng = Rng(Xoshiro256StarStar::seed_from_u64(3));
        let n = 20_000;
        let total: u64 = (0..n).map(|_| rng.poisson(5.0)).sum();
        let mean = total as f64 / n as f64;
        assert!((mean - 5.0).abs() < 0.1, "{mean}");
    }
}
