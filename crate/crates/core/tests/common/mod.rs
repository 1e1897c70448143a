#![allow(dead_code)]

use burstwatch::eval::{gen_synthetic, PlantedEvent, SynthRegion, SyntheticConfig, SyntheticCorpus};
use burstwatch::geo::RegionIndex;
use burstwatch::ingest::{EventClass, Ingestor, KeywordGroup};
use burstwatch::newsstore::NewsStore;
use burstwatch::pipeline::{detect, summarise_events, Detection};
use burstwatch::surveillance::DetectionConfig;
use burstwatch::tnt::{EventSummary, TextResources, TntConfig};
use chrono::{Days, NaiveDate};

/// Seed for the single-spike corpus. The flat variant of this corpus has no
/// noise alarm reaching the event threshold; see the ledger for how often
/// that holds across seeds.
pub const SPIKE_SEED: u64 = 7;

pub fn spike_config(multiplier: f64) -> SyntheticConfig {
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
        groups: vec![KeywordGroup::new(EventClass::Symptom, "vomit", &[])],
        baseline_mean: 20.0,
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

const KEYWORDS: [&str; 10] = [
    "vomit", "fever", "cough", "sneeze", "headache", "rash", "nausea", "asthma", "sadness", "anxiety",
];

/// 10 regions x 10 groups x 100 days at about 101 matched messages per series-day.
pub fn volume_config() -> SyntheticConfig {
    SyntheticConfig {
        start: NaiveDate::from_ymd_opt(2014, 1, 1).unwrap(),
        days: 100,
        regions: (0..10)
            .map(|i| SynthRegion {
                label: format!("R{i}"),
                lat: 40.0 + 2.0 * i as f64,
                lon: -5.0 + 2.0 * i as f64,
                radius: 0.5,
            })
            .collect(),
        groups: KEYWORDS
            .iter()
            .map(|k| KeywordGroup::new(EventClass::Symptom, k, &[]))
            .collect(),
        baseline_mean: 101.0,
        background_mean: 0.0,
        off_topic_articles: 0,
        events: Vec::new(),
        users_per_region: 100_000,
    }
}

pub struct Run {
    pub synth: SyntheticCorpus,
    pub detection: Detection,
    pub summaries: Vec<EventSummary>,
}

pub fn run_pipeline(cfg: &SyntheticConfig, seed: u64) -> Run {
    let synth = gen_synthetic(cfg, seed).unwrap();
    let index = RegionIndex::new(&synth.regions);
    let corpus = Ingestor::new(&synth.groups, &index, None).process(synth.domain_messages());
    let detection = detect(&corpus, &synth.groups, &index, &DetectionConfig::default()).unwrap();
    let mut store = NewsStore::new();
    for a in &synth.articles {
        store.insert(a.clone()).unwrap();
    }
    let summaries = summarise_events(
        &detection.events,
        &corpus,
        Some(&store),
        &TextResources::default(),
        &TntConfig::default(),
    );
    Run {
        synth,
        detection,
        summaries,
    }
}
