//! Browser bindings. Every export takes and returns JSON strings; the plain
//! `*_json` functions hold the logic so they can be tested natively.

// `!(x >= t)` is how NaN fails range checks here.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use burstwatch::eval::{evaluation_set, sweep_mu_threshold, threshold_grid};
use burstwatch::geo::{dbscan, regions_from_labels, GeoPoint, Metric};
use burstwatch::ingest::{CountSeries, DayCount};
use burstwatch::surveillance::{alarm_from_run, detect_runs, ears_c2, ears_c3, C2Config, MIN_MU_HISTORY};
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

#[derive(Deserialize)]
struct Point {
    lat: f64,
    lon: f64,
}

#[derive(Serialize)]
struct Region {
    id: u32,
    label: String,
    hull: Vec<[f64; 2]>,
    area: f64,
}

#[derive(Serialize)]
struct Clustering {
    labels: Vec<i32>,
    regions: Vec<Region>,
    noise: usize,
}

/// `points`: `[{"lat":..,"lon":..}, ...]`, Euclidean on degrees.
pub fn cluster_json(points: &str, eps: f64, min_pts: usize) -> Result<String, String> {
    let pts: Vec<Point> = serde_json::from_str(points).map_err(|e| e.to_string())?;
    let pts: Vec<GeoPoint> = pts
        .iter()
        .enumerate()
        .map(|(i, p)| GeoPoint::new(p.lat, p.lon).ok_or(format!("point {i} is out of range")))
        .collect::<Result<_, _>>()?;
    let labels = dbscan(&pts, eps, min_pts, Metric::Euclidean).map_err(|e| e.to_string())?;
    let regions = regions_from_labels(&pts, &labels)
        .iter()
        .map(|r| Region {
            id: r.id,
            label: r.label.clone(),
            hull: r.hull.iter().map(|p| [p.lat, p.lon]).collect(),
            area: r.area(),
        })
        .collect();
    let noise = labels.iter().filter(|&&l| l < 0).count();
    to_json(&Clustering { labels, regions, noise })
}

/// Sweep of the bundled labelled alarms over `lo..=hi` in `step`s.
pub fn mu_sweep_json(lo: f64, hi: f64, step: f64) -> Result<String, String> {
    if !(step > 0.0 && hi >= lo && (hi - lo) / step <= 10_000.0) {
        return Err("need step > 0, hi >= lo and at most 10000 steps".into());
    }
    to_json(&sweep_mu_threshold(&evaluation_set(), &threshold_grid(lo, hi, step)))
}

#[derive(Serialize)]
struct Day {
    count: u64,
    c2_statistic: Option<f64>,
    c2: bool,
    c3: bool,
}

#[derive(Serialize)]
struct Run {
    first: usize,
    last: usize,
    mu_max: f64,
}

#[derive(Serialize)]
struct Scan {
    days: Vec<Day>,
    alarms: Vec<Run>,
}

/// C2/C3 and the spike score over one raw daily series (no weekday
/// normalisation). Days before the baseline and score history are skipped.
pub fn scan_json(counts: &str, window: usize, sigma: f64) -> Result<String, String> {
    let counts: Vec<u64> = serde_json::from_str(counts).map_err(|e| e.to_string())?;
    if window < 2 || !(sigma > 0.0) {
        return Err("need window >= 2 and sigma > 0".into());
    }
    let cfg = C2Config {
        window,
        guard: 0,
        sigma,
    };
    let series = CountSeries {
        group: 0,
        region: 0,
        start: chrono::NaiveDate::default(),
        entries: counts
            .iter()
            .map(|&c| DayCount {
                raw_count: c,
                user_count: c,
                normalized_count: c as f64,
            })
            .collect(),
    };
    let first_day = window.max(MIN_MU_HISTORY);
    let norm = series.normalized();
    let c2: Vec<_> = (0..norm.len()).map(|t| ears_c2(&norm, t, &cfg)).collect();
    let days = counts
        .iter()
        .enumerate()
        .map(|(t, &count)| Day {
            count,
            c2_statistic: (!c2[t].insufficient).then_some(c2[t].statistic),
            c2: t >= first_day && c2[t].alarm,
            c3: t >= first_day && ears_c3(&c2, t).alarm,
        })
        .collect();
    let alarms = detect_runs(&series, &cfg, first_day)
        .iter()
        .filter_map(|run| {
            let a = alarm_from_run(&series, run).ok()?;
            Some(Run {
                first: run.first,
                last: run.last,
                mu_max: a.mu_max,
            })
        })
        .collect();
    to_json(&Scan { days, alarms })
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn cluster(points: &str, eps: f64, min_pts: usize) -> Result<String, JsError> {
    cluster_json(points, eps, min_pts).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn mu_sweep(lo: f64, hi: f64, step: f64) -> Result<String, JsError> {
    mu_sweep_json(lo, hi, step).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn scan(counts: &str, window: usize, sigma: f64) -> Result<String, JsError> {
    scan_json(counts, window, sigma).map_err(|e| JsError::new(&e))
}
