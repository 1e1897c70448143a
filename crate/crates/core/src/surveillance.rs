//! EARS C2/C3 aberration detection over daily count series, alarm grouping,
//! the MAD-based spike score and the event filters.

use std::collections::BTreeSet;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{CountSeries, GroupId, Message};

#[derive(Debug, Error, PartialEq)]
pub enum SurveillanceError {
    #[error("need at least {needed} days of history, got {got}")]
    InsufficientHistory { needed: usize, got: usize },
    #[error("median absolute deviation is zero")]
    ZeroMad,
    #[error("alarm has no days")]
    EmptyAlarm,
}

/// Minimum normalisation history, in days.
pub const MIN_NORMALIZATION_DAYS: usize = 28;
/// Minimum history for the spike score.
pub const MIN_MU_HISTORY: usize = 7;
const FACTOR_CLAMP: (f64, f64) = (0.5, 2.0);

/// Per-weekday multipliers, indexed Monday = 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeekdayFactors(pub [f64; 7]);

impl Default for WeekdayFactors {
    fn default() -> Self {
        Self([1.0; 7])
    }
}

impl WeekdayFactors {
    /// Estimated from global daily totals dated strictly before `before`:
    /// `factor[d] = overall mean / mean of weekday d`, clamped to [0.5, 2].
    pub fn estimate(history: &[(NaiveDate, u64)], before: NaiveDate) -> Result<Self, SurveillanceError> {
        let prior: Vec<&(NaiveDate, u64)> = history.iter().filter(|(d, _)| *d < before).collect();
        if prior.len() < MIN_NORMALIZATION_DAYS {
            return Err(SurveillanceError::InsufficientHistory {
                needed: MIN_NORMALIZATION_DAYS,
                got: prior.len(),
            });
        }
        let mut sum = [0.0f64; 7];
        let mut days = [0u32; 7];
        for (d, total) in &prior {
            let w = d.weekday().num_days_from_monday() as usize;
            sum[w] += *total as f64;
            days[w] += 1;
        }
        let overall = prior.iter().map(|(_, t)| *t as f64).sum::<f64>() / prior.len() as f64;
        let mut factors = [1.0; 7];
        for w in 0..7 {
            let mean = if days[w] > 0 { sum[w] / f64::from(days[w]) } else { 0.0 };
            if mean > 0.0 {
                factors[w] = (overall / mean).clamp(FACTOR_CLAMP.0, FACTOR_CLAMP.1);
            }
        }
        Ok(Self(factors))
    }

    pub fn factor(&self, d: NaiveDate) -> f64 {
        self.0[d.weekday().num_days_from_monday() as usize]
    }

    pub fn apply(&self, series: &mut CountSeries) {
        for i in 0..series.entries.len() {
            let f = self.factor(series.date_at(i));
            let e = &mut series.entries[i];
            e.normalized_count = e.raw_count as f64 * f;
        }
    }
}

/// Fills `normalized_count` using factors estimated from history before the
/// series start.
pub fn normalize_weekday(series: &CountSeries, history: &[(NaiveDate, u64)]) -> Result<CountSeries, SurveillanceError> {
    let factors = WeekdayFactors::estimate(history, series.start)?;
    let mut out = series.clone();
    factors.apply(&mut out);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct C2Config {
    /// Baseline length in days.
    pub window: usize,
    /// Days skipped between the baseline and the tested day.
    pub guard: usize,
    /// Exceedance threshold in baseline standard deviations.
    pub sigma: f64,
}

impl Default for C2Config {
    fn default() -> Self {
        Self {
            window: 7,
            guard: 0,
            sigma: 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct C2Result {
    pub alarm: bool,
    pub statistic: f64,
    /// Not enough baseline days before `t`; `alarm` is false.
    pub insufficient: bool,
}

// Absorbs rounding when the exceedance lands exactly on the threshold.
const TIE_EPS: f64 = 1e-9;

/// EARS C2 for day index `t` of `counts`.
pub fn ears_c2(counts: &[f64], t: usize, cfg: &C2Config) -> C2Result {
    let lag = cfg.guard + cfg.window;
    if cfg.window == 0 || t < lag || t >= counts.len() {
        return C2Result {
            alarm: false,
            statistic: 0.0,
            insufficient: true,
        };
    }
    let base = &counts[t - lag..t - cfg.guard];
    let n = base.len() as f64;
    let mean = base.iter().sum::<f64>() / n;
    let sd = (base.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    let diff = counts[t] - mean;
    let (alarm, statistic) = if sd > 0.0 {
        (diff > cfg.sigma * sd + TIE_EPS, diff / sd)
    } else {
        (diff >= 1.0 - TIE_EPS, diff)
    };
    C2Result {
        alarm,
        statistic,
        insufficient: false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct C3Result {
    pub alarm: bool,
    pub insufficient: bool,
}

/// EARS C3 at `t`: at least two C2 alarms among days `t`, `t-1`, `t-2`.
pub fn ears_c3(c2: &[C2Result], t: usize) -> C3Result {
    if t < 2 || t >= c2.len() || c2[t - 2..=t].iter().any(|r| r.insufficient) {
        return C3Result {
            alarm: false,
            insufficient: true,
        };
    }
    let hits = c2[t - 2..=t].iter().filter(|r| r.alarm).count();
    C3Result {
        alarm: hits >= 2,
        insufficient: false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Detector {
    C2,
    C3,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DayFlags {
    pub c2: bool,
    pub c3: bool,
}

impl DayFlags {
    pub fn any(&self) -> bool {
        self.c2 || self.c3
    }
}

/// A maximal run of flagged days, as inclusive offsets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlagRun {
    pub first: usize,
    pub last: usize,
    pub source: BTreeSet<Detector>,
}

/// Merges consecutive flagged days into runs.
pub fn group_alarms(flags: &[DayFlags]) -> Vec<FlagRun> {
    let mut runs: Vec<FlagRun> = Vec::new();
    for (i, f) in flags.iter().enumerate() {
        if !f.any() {
            continue;
        }
        let extend = runs.last().is_some_and(|r| r.last + 1 == i);
        if !extend {
            runs.push(FlagRun {
                first: i,
                last: i,
                source: BTreeSet::new(),
            });
        }
        let run = runs.last_mut().expect("pushed above");
        run.last = i;
        if f.c2 {
            run.source.insert(Detector::C2);
        }
        if f.c3 {
            run.source.insert(Detector::C3);
        }
    }
    runs
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

fn sorted(values: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.into_iter().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Median and median absolute deviation.
pub fn median_mad(history: &[f64]) -> (f64, f64) {
    let med = median(&sorted(history.iter().copied()));
    let mad = median(&sorted(history.iter().map(|x| (x - med).abs())));
    (med, mad)
}

/// Spike score `(observation - median) / max(MAD, mad_floor)` against the
/// history strictly before the observation. A zero floor with zero MAD is an
/// error.
pub fn mu_with_floor(observation: f64, history: &[f64], mad_floor: f64) -> Result<f64, SurveillanceError> {
    if history.len() < MIN_MU_HISTORY {
        return Err(SurveillanceError::InsufficientHistory {
            needed: MIN_MU_HISTORY,
            got: history.len(),
        });
    }
    let (med, mad) = median_mad(history);
    let scale = mad.max(mad_floor);
    if scale <= 0.0 {
        return Err(SurveillanceError::ZeroMad);
    }
    Ok((observation - med) / scale)
}

/// Spike score with the MAD floored at 1.
pub fn mu(observation: f64, history: &[f64]) -> Result<f64, SurveillanceError> {
    mu_with_floor(observation, history, 1.0)
}

/// Maximum spike score over the alarm days; day `i` is scored against
/// `prior` followed by the alarm days before it.
pub fn mu_max(alarm_counts: &[u64], prior: &[u64]) -> Result<f64, SurveillanceError> {
    if alarm_counts.is_empty() {
        return Err(SurveillanceError::EmptyAlarm);
    }
    let mut history: Vec<f64> = prior.iter().map(|&c| c as f64).collect();
    let mut best = f64::NEG_INFINITY;
    for &c in alarm_counts {
        best = best.max(mu(c as f64, &history)?);
        history.push(c as f64);
    }
    Ok(best)
}

/// Messages per distinct author; 0 for no messages.
pub fn tweet_user_ratio<'a, I>(messages: I) -> f64
where
    I: IntoIterator<Item = &'a Message>,
{
    let mut n = 0usize;
    let mut users = BTreeSet::new();
    for m in messages {
        n += 1;
        users.insert(m.user_id.as_str());
    }
    if n == 0 {
        0.0
    } else {
        n as f64 / users.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alarm {
    pub group: GroupId,
    pub region: u32,
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
    pub day_counts: Vec<u64>,
    pub source: BTreeSet<Detector>,
    pub mu_max: f64,
    pub tweet_user_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventThresholds {
    pub mu_threshold: f64,
    pub ratio_threshold: f64,
}

impl Default for EventThresholds {
    fn default() -> Self {
        Self {
            mu_threshold: 4.0,
            ratio_threshold: 1.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    MuBelowThreshold,
    SpamRatio,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Event,
    Rejected(Vec<RejectReason>),
}

/// Event iff `mu_max >= mu_threshold` and `ratio <= ratio_threshold`.
pub fn classify_event(alarm: &Alarm, t: &EventThresholds) -> Verdict {
    let mut reasons = Vec::new();
    if !(alarm.mu_max >= t.mu_threshold) {
        reasons.push(RejectReason::MuBelowThreshold);
    }
    if alarm.tweet_user_ratio > t.ratio_threshold {
        reasons.push(RejectReason::SpamRatio);
    }
    if reasons.is_empty() {
        Verdict::Event
    } else {
        Verdict::Rejected(reasons)
    }
}

/// An alarm that passed both filters, with its gist and display id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub id: String,
    pub keyword: String,
    pub region_label: String,
    pub alarm: Alarm,
    pub gist: Vec<String>,
}

/// `FL` + `B` + `-23-09`: first two letters of the keyword (upper-cased), the
/// region label, then day and month of the start date.
pub fn event_id(keyword: &str, region_label: &str, start: NaiveDate) -> String {
    let prefix: String = keyword
        .chars()
        .filter(|c| c.is_alphanumeric())
        .take(2)
        .flat_map(char::to_uppercase)
        .collect();
    format!("{prefix}{region_label}-{:02}-{:02}", start.day(), start.month())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionConfig {
    pub c2: C2Config,
    pub thresholds: EventThresholds,
    /// Leading days used only as normalisation and baseline history.
    pub warmup_days: usize,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        Self {
            c2: C2Config::default(),
            thresholds: EventThresholds::default(),
            warmup_days: MIN_NORMALIZATION_DAYS,
        }
    }
}

/// Flag runs for one normalised series, considering only days at or after
/// `first_day`. C2 and C3 read the normalised counts.
pub fn detect_runs(series: &CountSeries, cfg: &C2Config, first_day: usize) -> Vec<FlagRun> {
    let counts = series.normalized();
    let c2: Vec<C2Result> = (0..counts.len()).map(|t| ears_c2(&counts, t, cfg)).collect();
    let flags: Vec<DayFlags> = (0..counts.len())
        .map(|t| {
            if t < first_day {
                return DayFlags::default();
            }
            DayFlags {
                c2: c2[t].alarm,
                c3: ears_c3(&c2, t).alarm,
            }
        })
        .collect();
    group_alarms(&flags)
}

/// Turns a run into an alarm with its spike score; the tweet-user ratio is
/// filled in by the caller once the gist is known.
pub fn alarm_from_run(series: &CountSeries, run: &FlagRun) -> Result<Alarm, SurveillanceError> {
    let raw = series.raw();
    let day_counts = raw[run.first..=run.last].to_vec();
    let mu_max = mu_max(&day_counts, &raw[..run.first])?;
    Ok(Alarm {
        group: series.group,
        region: series.region,
        start_date: series.date_at(run.first),
        end_date: series.date_at(run.last),
        day_counts,
        source: run.source.clone(),
        mu_max,
        tweet_user_ratio: 0.0,
    })
}
