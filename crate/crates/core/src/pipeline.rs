//! Ingest → detect → summarise composition.

use chrono::Days;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::RegionIndex;
use crate::ingest::{Corpus, CountSeries, DateRange, KeywordGroup};
use crate::newsstore::NewsStore;
use crate::par;
use crate::surveillance::{
    alarm_from_run, classify_event, detect_runs, event_id, tweet_user_ratio, Alarm, DetectionConfig, Event,
    RejectReason, SurveillanceError, Verdict, WeekdayFactors,
};
use crate::tnt::{fetch_gist, summarise, EventSummary, TextResources, TntConfig};

#[derive(Debug, Error, PartialEq)]
pub enum PipelineError {
    #[error("corpus has no messages")]
    EmptyCorpus,
    #[error("weekday normalisation: {0}")]
    Normalisation(#[from] SurveillanceError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Event,
    Rejected,
}

/// One line of the alarms output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlarmRecord {
    pub event_id: String,
    pub keyword: String,
    pub region_label: String,
    #[serde(flatten)]
    pub alarm: Alarm,
    pub outcome: Outcome,
    pub reasons: Vec<RejectReason>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Detection {
    pub range: Option<DateRange>,
    pub factors: WeekdayFactors,
    /// All alarms, ordered by (start date, group, region).
    pub alarms: Vec<AlarmRecord>,
    pub events: Vec<Event>,
}

/// First to last day with any parsed message.
pub fn corpus_range(corpus: &Corpus) -> Option<DateRange> {
    let totals = corpus.daily_totals();
    let (first, _) = totals.first_key_value()?;
    let (last, _) = totals.last_key_value()?;
    Some(DateRange {
        start: *first,
        end: *last,
    })
}

fn alarms_for_series(
    mut series: CountSeries,
    factors: &WeekdayFactors,
    corpus: &Corpus,
    cfg: &DetectionConfig,
) -> Vec<Alarm> {
    factors.apply(&mut series);
    detect_runs(&series, &cfg.c2, cfg.warmup_days)
        .iter()
        .filter_map(|run| alarm_from_run(&series, run).ok())
        .map(|mut alarm| {
            alarm.tweet_user_ratio = tweet_user_ratio(fetch_gist(corpus, &alarm));
            alarm
        })
        .collect()
}

/// Counts, normalises and scans every non-empty series over the corpus date
/// range. The first `warmup_days` only feed the weekday factors and C2
/// baselines. Output does not depend on thread count.
pub fn detect(
    corpus: &Corpus,
    groups: &[KeywordGroup],
    regions: &RegionIndex,
    cfg: &DetectionConfig,
) -> Result<Detection, PipelineError> {
    let range = corpus_range(corpus).ok_or(PipelineError::EmptyCorpus)?;
    let table = corpus.count_series(range);
    let history: Vec<_> = (0..range.days()).map(|i| (range.date_at(i), table.totals[i])).collect();
    let detect_from = range.start + Days::new(cfg.warmup_days as u64);
    let factors = WeekdayFactors::estimate(&history, detect_from)?;

    let series: Vec<CountSeries> = table.series.into_values().collect();
    let mut alarms: Vec<Alarm> = par::map(&series, |s| alarms_for_series(s.clone(), &factors, corpus, cfg))
        .into_iter()
        .flatten()
        .collect();
    alarms.sort_by_key(|a| (a.start_date, a.group, a.region));

    let mut out = Detection {
        range: Some(range),
        factors,
        ..Default::default()
    };
    for alarm in alarms {
        let keyword = groups[alarm.group].primary.clone();
        let region_label = regions.label(alarm.region).unwrap_or("?").to_string();
        let id = event_id(&keyword, &region_label, alarm.start_date);
        let (outcome, reasons) = match classify_event(&alarm, &cfg.thresholds) {
            Verdict::Event => (Outcome::Event, Vec::new()),
            Verdict::Rejected(r) => (Outcome::Rejected, r),
        };
        if outcome == Outcome::Event {
            out.events.push(Event {
                id: id.clone(),
                keyword: keyword.clone(),
                region_label: region_label.clone(),
                gist: fetch_gist(corpus, &alarm).iter().map(|m| m.id.clone()).collect(),
                alarm: alarm.clone(),
            });
        }
        out.alarms.push(AlarmRecord {
            event_id: id,
            keyword,
            region_label,
            alarm,
            outcome,
            reasons,
        });
    }
    Ok(out)
}

/// Summaries in event order.
pub fn summarise_events(
    events: &[Event],
    corpus: &Corpus,
    store: Option<&NewsStore>,
    res: &TextResources,
    cfg: &TntConfig,
) -> Vec<EventSummary> {
    par::map(events, |e| summarise(e, corpus, store, res, cfg))
}
