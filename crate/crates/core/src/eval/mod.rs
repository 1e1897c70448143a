//! Threshold sweeps over labelled alarms and the seeded synthetic corpus.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

mod synth;

pub use synth::{gen_synthetic, PlantedEvent, SynthRegion, SyntheticConfig, SyntheticCorpus, TruthEvent, FILLER_WORDS};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("fixture row {row}: {reason}")]
    BadRow { row: usize, reason: String },
    #[error("invalid synthetic config: {}", .0.join("; "))]
    InvalidConfig(Vec<String>),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// One manually verified alarm.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabeledAlarm {
    pub id: String,
    pub keyword: String,
    pub region: String,
    pub mu_max: f64,
    pub verified: bool,
    /// Set when the label carries a qualification (`NO*` in the fixture).
    pub annotated: bool,
    pub note: String,
}

#[derive(Deserialize)]
struct FixtureRow {
    id: String,
    keyword: String,
    region: String,
    mu_max: f64,
    verified: String,
    #[serde(default)]
    note: String,
}

/// The bundled 33-alarm evaluation set.
pub const EVALUATION_SET: &str = include_str!("../../data/labelled_alarms.csv");

/// Reads fixture CSV: `id,keyword,region,mu_max,verified,note` with verified
/// one of `YES`, `NO`, `NO*`.
pub fn read_labeled_alarms<R: Read>(input: R) -> Result<Vec<LabeledAlarm>, EvalError> {
    let mut reader = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for (i, row) in reader.deserialize::<FixtureRow>().enumerate() {
        let row = row?;
        let bad = |reason: String| EvalError::BadRow { row: i + 1, reason };
        let (verified, annotated) = match row.verified.trim() {
            "YES" => (true, false),
            "NO" => (false, false),
            "NO*" => (false, true),
            other => return Err(bad(format!("verified must be YES, NO or NO*, got {other:?}"))),
        };
        if !(row.mu_max >= 0.0) {
            return Err(bad(format!("mu_max must be non-negative, got {}", row.mu_max)));
        }
        out.push(LabeledAlarm {
            id: row.id,
            keyword: row.keyword,
            region: row.region,
            mu_max: row.mu_max,
            verified,
            annotated,
            note: row.note,
        });
    }
    Ok(out)
}

pub fn evaluation_set() -> Vec<LabeledAlarm> {
    read_labeled_alarms(EVALUATION_SET.as_bytes()).expect("bundled fixture parses")
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// `(1 + b^2) P R / (b^2 P + R)`; 0 when undefined.
pub fn f_beta(tp: u64, fp: u64, fn_: u64, beta: f64) -> f64 {
    assert!(beta > 0.0, "beta must be positive");
    let p = ratio(tp, tp + fp);
    let r = ratio(tp, tp + fn_);
    let b2 = beta * beta;
    let den = b2 * p + r;
    if den == 0.0 {
        0.0
    } else {
        (1.0 + b2) * p * r / den
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub threshold: f64,
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub precision: f64,
    pub recall: f64,
    pub f_beta: f64,
}

impl SweepResult {
    pub fn from_counts(threshold: f64, tp: u64, fp: u64, tn: u64, fn_: u64, beta: f64) -> Self {
        Self {
            threshold,
            tp,
            fp,
            tn,
            fn_,
            precision: ratio(tp, tp + fp),
            recall: ratio(tp, tp + fn_),
            f_beta: f_beta(tp, fp, fn_, beta),
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Flag alarms with `mu_max >= threshold` and score against the labels (F1).
pub fn sweep_mu_threshold(alarms: &[LabeledAlarm], thresholds: &[f64]) -> Vec<SweepResult> {
    thresholds
        .iter()
        .map(|&th| {
            let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
            for a in alarms {
                match (a.mu_max >= th, a.verified) {
                    (true, true) => tp += 1,
                    (true, false) => fp += 1,
                    (false, true) => fn_ += 1,
                    (false, false) => tn += 1,
                }
            }
            SweepResult::from_counts(th, tp, fp, tn, fn_, 1.0)
        })
        .collect()
}

/// What a summarisation run returned for one event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NewsOutcome {
    NoneReturned,
    Relevant,
    Irrelevant,
}

/// News-linkage sweep (F0.5). `newsworthy[i]` labels event `i`; `run(i, th)`
/// reports what linkage returned for it at threshold `th`.
///
/// Relevant news for a newsworthy event is a true positive, any returned news
/// that is irrelevant or attached to a non-newsworthy event a false positive,
/// nothing returned for a newsworthy event a false negative.
pub fn sweep_pcss_threshold<F>(newsworthy: &[bool], thresholds: &[f64], mut run: F) -> Vec<SweepResult>
where
    F: FnMut(usize, f64) -> NewsOutcome,
{
    thresholds
        .iter()
        .map(|&th| {
            let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
            for (i, &worthy) in newsworthy.iter().enumerate() {
                match (run(i, th), worthy) {
                    (NewsOutcome::Relevant, true) => tp += 1,
                    (NewsOutcome::NoneReturned, true) => fn_ += 1,
                    (NewsOutcome::NoneReturned, false) => tn += 1,
                    _ => fp += 1,
                }
            }
            SweepResult::from_counts(th, tp, fp, tn, fn_, 0.5)
        })
        .collect()
}

/// `lo, lo + step, ..., hi` without accumulating rounding error.
pub fn threshold_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    assert!(step > 0.0 && hi >= lo, "bad grid");
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| lo + i as f64 * step).collect()
}

/// CSV: `threshold,tp,fp,tn,fn,precision,recall,f_beta`.
pub fn write_sweep_csv<W: Write>(out: W, rows: &[SweepResult]) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn f_beta_examples() {
        assert_eq!(f_beta(10, 0, 0, 1.0), 1.0);
        assert_eq!(f_beta(0, 3, 4, 1.0), 0.0);
        assert_eq!(f_beta(0, 0, 0, 0.5), 0.0);
        // 2PR/(P+R), P = 22/24, R = 22/23
        let (p, r) = (22.0 / 24.0, 22.0 / 23.0);
        assert_abs_diff_eq!(f_beta(22, 2, 1, 1.0), 2.0 * p * r / (p + r), epsilon = 1e-12);
        assert_abs_diff_eq!(f_beta(22, 2, 1, 1.0), 0.9362, epsilon = 5e-5);
        assert_abs_diff_eq!(f_beta(4, 1, 0, 0.5), 5.0 / 6.0, epsilon = 1e-12);
    }

    #[test]
    fn fixture_shape() {
        let set = evaluation_set();
        assert_eq!(set.len(), 33);
        let starred: Vec<_> = set.iter().filter(|a| a.annotated).collect();
        assert_eq!(starred.len(), 1);
        assert_eq!(starred[0].id, "FLB-23-09");
        assert!(!starred[0].verified);
        assert!(!starred[0].note.is_empty());
    }

    #[test]
    fn bad_rows() {
        let bad = "id,keyword,region,mu_max,verified,note\nX,k,r,3,MAYBE,\n";
        assert!(matches!(
            read_labeled_alarms(bad.as_bytes()),
            Err(EvalError::BadRow { row: 1, .. })
        ));
        let neg = "id,keyword,region,mu_max,verified,note\nX,k,r,-1,YES,\n";
        assert!(read_labeled_alarms(neg.as_bytes()).is_err());
    }

    #[test]
    fn mu_sweep_on_fixture() {
        let set = evaluation_set();
        let rows = sweep_mu_threshold(&set, &threshold_grid(0.0, 20.0, 1.0));
        assert!(rows.iter().all(|r| r.total() == 33));
        assert_eq!(rows[0].recall, 1.0);
        assert_eq!(rows[6].precision, 1.0);
        assert!((0.93..=0.94).contains(&rows[4].f_beta));
        for w in rows.windows(2) {
            assert!(w[1].tp <= w[0].tp && w[1].fp <= w[0].fp);
            assert!(w[1].tn >= w[0].tn && w[1].fn_ >= w[0].fn_);
        }
    }

    #[test]
    fn pcss_sweep_outcomes() {
        let worthy = [true, true, true, true, false, true];
        let rows = sweep_pcss_threshold(&worthy, &[0.0], |i, _| match i {
            4 => NewsOutcome::Irrelevant,
            _ => NewsOutcome::Relevant,
        });
        assert_eq!((rows[0].tp, rows[0].fp, rows[0].fn_), (5, 1, 0));
        let rows = sweep_pcss_threshold(&worthy[..5], &[0.0], |i, _| {
            if i == 4 {
                NewsOutcome::Irrelevant
            } else {
                NewsOutcome::Relevant
            }
        });
        assert_abs_diff_eq!(rows[0].f_beta, 5.0 / 6.0, epsilon = 1e-12);
        let all = sweep_pcss_threshold(&worthy, &[0.0], |i, _| {
            if worthy[i] {
                NewsOutcome::Relevant
            } else {
                NewsOutcome::NoneReturned
            }
        });
        assert_eq!(all[0].f_beta, 1.0);
        let none = sweep_pcss_threshold(&worthy, &[0.0], |_, _| NewsOutcome::NoneReturned);
        assert_eq!(none[0].f_beta, 0.0);
    }

    #[test]
    fn sweep_csv_header() {
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &[SweepResult::from_counts(4.0, 23, 2, 7, 1, 1.0)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("threshold,tp,fp,tn,fn,precision,recall,f_beta\n4.0,23,2,7,1,"));
    }

    #[test]
    fn grid_is_exact() {
        let g = threshold_grid(-0.2, 0.2, 0.02);
        assert_eq!(g.len(), 21);
        assert_abs_diff_eq!(g[10], 0.0, epsilon = 1e-12);
    }
}
