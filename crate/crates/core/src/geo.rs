//! Data-driven regions: DBSCAN over message coordinates, one convex hull per
//! cluster, and point-to-region assignment with a catch-all noise zone.
//!
//! Hull geometry treats longitude as `x` and latitude as `y`; "counter-clockwise"
//! is with respect to that plane.

use std::collections::{HashMap, VecDeque};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeoError {
    #[error("no points to cluster")]
    Empty,
    #[error("non-finite or out-of-range coordinate at index {0}")]
    BadCoordinate(usize),
    #[error("eps must be positive and finite, got {0}")]
    BadEps(f64),
    #[error("min_pts must be at least 1")]
    BadMinPts,
    #[error("hull needs at least 3 non-collinear points")]
    DegenerateHull,
    #[error("invalid region {id}: {reason}")]
    InvalidRegion { id: u32, reason: String },
    #[error("regions file line {line}: {reason}")]
    BadRegionsLine { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Option<Self> {
        let p = Self { lat, lon };
        p.is_valid().then_some(p)
    }

    pub fn is_valid(&self) -> bool {
        self.lat.is_finite()
            && self.lon.is_finite()
            && (-90.0..=90.0).contains(&self.lat)
            && (-180.0..=180.0).contains(&self.lon)
    }
}

/// Distance used for DBSCAN neighbourhoods.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// Euclidean on raw `(lat, lon)` degrees; `eps` is in degrees.
    #[default]
    Euclidean,
    /// Great-circle distance; `eps` is in kilometres.
    Haversine,
}

const EARTH_RADIUS_KM: f64 = 6371.0088;

fn haversine_km(a: &GeoPoint, b: &GeoPoint) -> f64 {
    let (la1, la2) = (a.lat.to_radians(), b.lat.to_radians());
    let dlat = la2 - la1;
    let dlon = (b.lon - a.lon).to_radians();
    let h = (dlat / 2.0).sin().powi(2) + la1.cos() * la2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

pub const NOISE_LABEL: i32 = -1;

/// Neighbour lookup. Euclidean queries go through a uniform grid with cell
/// size `eps`; haversine falls back to a scan.
struct Neighbours<'a> {
    points: &'a [GeoPoint],
    eps: f64,
    metric: Metric,
    grid: HashMap<(i64, i64), Vec<usize>>,
}

impl<'a> Neighbours<'a> {
    fn new(points: &'a [GeoPoint], eps: f64, metric: Metric) -> Self {
        let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        if metric == Metric::Euclidean {
            for (i, p) in points.iter().enumerate() {
                grid.entry(Self::cell(p, eps)).or_default().push(i);
            }
        }
        Self {
            points,
            eps,
            metric,
            grid,
        }
    }

    fn cell(p: &GeoPoint, eps: f64) -> (i64, i64) {
        ((p.lat / eps).floor() as i64, (p.lon / eps).floor() as i64)
    }

    /// Indices within `eps` of point `i` (inclusive of `i`), ascending.
    fn of(&self, i: usize) -> Vec<usize> {
        let p = &self.points[i];
        let mut out = match self.metric {
            Metric::Euclidean => {
                let (cx, cy) = Self::cell(p, self.eps);
                let eps2 = self.eps * self.eps;
                let mut v = Vec::new();
                for dx in -1..=1 {
                    for dy in -1..=1 {
                        if let Some(bucket) = self.grid.get(&(cx + dx, cy + dy)) {
                            v.extend(bucket.iter().copied().filter(|&j| {
                                let q = &self.points[j];
                                let (a, b) = (p.lat - q.lat, p.lon - q.lon);
                                a * a + b * b <= eps2
                            }));
                        }
                    }
                }
                v
            }
            Metric::Haversine => (0..self.points.len())
                .filter(|&j| haversine_km(p, &self.points[j]) <= self.eps)
                .collect(),
        };
        out.sort_unstable();
        out
    }
}

/// DBSCAN cluster labels, one per input point; [`NOISE_LABEL`] marks noise.
///
/// Clusters are numbered from 0 in the order their first core point appears.
/// A border point reachable from several clusters joins the first one to
/// reach it.
pub fn dbscan(points: &[GeoPoint], eps: f64, min_pts: usize, metric: Metric) -> Result<Vec<i32>, GeoError> {
    if points.is_empty() {
        return Err(GeoError::Empty);
    }
    if let Some(bad) = points.iter().position(|p| !p.is_valid()) {
        return Err(GeoError::BadCoordinate(bad));
    }
    if !(eps.is_finite() && eps > 0.0) {
        return Err(GeoError::BadEps(eps));
    }
    if min_pts == 0 {
        return Err(GeoError::BadMinPts);
    }

    const UNVISITED: i32 = -2;
    let index = Neighbours::new(points, eps, metric);
    let mut labels = vec![UNVISITED; points.len()];
    let mut next = 0;
    for i in 0..points.len() {
        if labels[i] != UNVISITED {
            continue;
        }
        let seeds = index.of(i);
        if seeds.len() < min_pts {
            labels[i] = NOISE_LABEL;
            continue;
        }
        let cluster = next;
        next += 1;
        labels[i] = cluster;
        let mut queue: VecDeque<usize> = seeds.into_iter().filter(|&j| j != i).collect();
        while let Some(j) = queue.pop_front() {
            match labels[j] {
                NOISE_LABEL => labels[j] = cluster,
                UNVISITED => {
                    labels[j] = cluster;
                    let more = index.of(j);
                    if more.len() >= min_pts {
                        queue.extend(more.into_iter().filter(|&k| labels[k] < 0));
                    }
                }
                _ => {}
            }
        }
    }
    Ok(labels)
}

fn cross(o: &GeoPoint, a: &GeoPoint, b: &GeoPoint) -> f64 {
    (a.lon - o.lon) * (b.lat - o.lat) - (a.lat - o.lat) * (b.lon - o.lon)
}

/// Convex hull (Andrew's monotone chain), counter-clockwise, with collinear
/// boundary points removed.
pub fn convex_hull(points: &[GeoPoint]) -> Result<Vec<GeoPoint>, GeoError> {
    let mut pts: Vec<GeoPoint> = points.to_vec();
    pts.sort_by(|a, b| a.lon.total_cmp(&b.lon).then(a.lat.total_cmp(&b.lat)));
    pts.dedup();
    if pts.len() < 3 {
        return Err(GeoError::DegenerateHull);
    }
    let mut hull: Vec<GeoPoint> = Vec::with_capacity(2 * pts.len());
    for (pass, chain) in [pts.clone(), pts.iter().rev().copied().collect()].iter().enumerate() {
        // The upper chain must not pop into the finished lower chain.
        let floor = if pass == 0 { 2 } else { hull.len() + 1 };
        for p in chain.iter().skip(pass) {
            while hull.len() >= floor && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(*p);
        }
    }
    // The lower chain's start is repeated at the end of the upper chain.
    hull.pop();
    if hull.len() < 3 {
        return Err(GeoError::DegenerateHull);
    }
    Ok(hull)
}

fn polygon_area(hull: &[GeoPoint]) -> f64 {
    let n = hull.len();
    let twice: f64 = (0..n)
        .map(|i| {
            let (a, b) = (&hull[i], &hull[(i + 1) % n]);
            a.lon * b.lat - b.lon * a.lat
        })
        .sum();
    twice / 2.0
}

/// A tracked region: a convex, counter-clockwise hull.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterRegion {
    pub id: u32,
    pub label: String,
    pub hull: Vec<GeoPoint>,
}

impl ClusterRegion {
    pub fn new(id: u32, label: impl Into<String>, hull: Vec<GeoPoint>) -> Result<Self, GeoError> {
        let region = Self {
            id,
            label: label.into(),
            hull,
        };
        region.validate()?;
        Ok(region)
    }

    fn validate(&self) -> Result<(), GeoError> {
        let bad = |reason: &str| GeoError::InvalidRegion {
            id: self.id,
            reason: reason.to_string(),
        };
        let n = self.hull.len();
        if n < 3 {
            return Err(bad("hull has fewer than 3 vertices"));
        }
        if self.hull.iter().any(|p| !p.is_valid()) {
            return Err(bad("vertex out of range"));
        }
        for i in 0..n {
            let (a, b, c) = (&self.hull[i], &self.hull[(i + 1) % n], &self.hull[(i + 2) % n]);
            if a == b {
                return Err(bad("repeated consecutive vertex"));
            }
            if cross(a, b, c) <= 0.0 {
                return Err(bad("hull is not strictly convex and counter-clockwise"));
            }
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        polygon_area(&self.hull)
    }

    /// Boundary counts as inside.
    pub fn contains(&self, p: &GeoPoint) -> bool {
        let n = self.hull.len();
        (0..n).all(|i| cross(&self.hull[i], &self.hull[(i + 1) % n], p) >= -1e-12)
    }

    pub fn centroid(&self) -> GeoPoint {
        // Area-weighted centroid of the polygon.
        let n = self.hull.len();
        let (mut cx, mut cy, mut a2) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let (p, q) = (&self.hull[i], &self.hull[(i + 1) % n]);
            let w = p.lon * q.lat - q.lon * p.lat;
            a2 += w;
            cx += (p.lon + q.lon) * w;
            cy += (p.lat + q.lat) * w;
        }
        GeoPoint {
            lat: cy / (3.0 * a2),
            lon: cx / (3.0 * a2),
        }
    }

    fn bbox(&self) -> (f64, f64, f64, f64) {
        self.hull.iter().fold(
            (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
            |(a, b, c, d), p| (a.min(p.lat), b.min(p.lon), c.max(p.lat), d.max(p.lon)),
        )
    }
}

/// Either a tracked region id or the catch-all noise zone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Zone {
    Region(u32),
    Noise,
}

impl Zone {
    pub fn region(self) -> Option<u32> {
        match self {
            Zone::Region(id) => Some(id),
            Zone::Noise => None,
        }
    }
}

/// Region containing `p`; the smallest-area hull wins on overlap, then the
/// lower id.
pub fn assign_region(p: &GeoPoint, regions: &[ClusterRegion]) -> Zone {
    regions
        .iter()
        .filter(|r| r.contains(p))
        .min_by(|a, b| a.area().total_cmp(&b.area()).then(a.id.cmp(&b.id)))
        .map_or(Zone::Noise, |r| Zone::Region(r.id))
}

/// Precomputed lookup for assigning many points against a fixed region set.
#[derive(Debug, Clone)]
pub struct RegionIndex {
    // Sorted by (area, id): the first containing entry is the answer.
    entries: Vec<(ClusterRegion, (f64, f64, f64, f64))>,
}

impl RegionIndex {
    pub fn new(regions: &[ClusterRegion]) -> Self {
        let mut entries: Vec<_> = regions.iter().map(|r| (r.clone(), r.bbox())).collect();
        entries.sort_by(|a, b| a.0.area().total_cmp(&b.0.area()).then(a.0.id.cmp(&b.0.id)));
        Self { entries }
    }

    pub fn assign(&self, p: &GeoPoint) -> Zone {
        for (region, (lat0, lon0, lat1, lon1)) in &self.entries {
            if p.lat < lat0 - 1e-9 || p.lat > lat1 + 1e-9 || p.lon < lon0 - 1e-9 || p.lon > lon1 + 1e-9 {
                continue;
            }
            if region.contains(p) {
                return Zone::Region(region.id);
            }
        }
        Zone::Noise
    }

    pub fn regions(&self) -> impl Iterator<Item = &ClusterRegion> {
        self.entries.iter().map(|(r, _)| r)
    }

    pub fn label(&self, id: u32) -> Option<&str> {
        self.regions().find(|r| r.id == id).map(|r| r.label.as_str())
    }
}

/// Builds one region per DBSCAN cluster; clusters whose hull degenerates are
/// folded into noise. Regions are numbered by cluster label and labelled
/// `C<id>`.
pub fn regions_from_labels(points: &[GeoPoint], labels: &[i32]) -> Vec<ClusterRegion> {
    let clusters = labels.iter().copied().max().map_or(0, |m| m + 1).max(0) as usize;
    let mut members: Vec<Vec<GeoPoint>> = vec![Vec::new(); clusters];
    for (p, &l) in points.iter().zip(labels) {
        if l >= 0 {
            members[l as usize].push(*p);
        }
    }
    members
        .iter()
        .enumerate()
        .filter_map(|(id, pts)| {
            let hull = convex_hull(pts).ok()?;
            ClusterRegion::new(id as u32, format!("C{id}"), hull).ok()
        })
        .collect()
}

#[derive(Serialize, Deserialize)]
struct RegionRecord {
    id: u32,
    label: String,
    hull: Vec<[f64; 2]>,
}

/// Regions file: one JSON object per line,
/// `{"id": int, "label": str, "hull": [[lat, lon], ...]}`.
pub fn write_regions<W: Write>(mut out: W, regions: &[ClusterRegion]) -> std::io::Result<()> {
    for r in regions {
        let rec = RegionRecord {
            id: r.id,
            label: r.label.clone(),
            hull: r.hull.iter().map(|p| [p.lat, p.lon]).collect(),
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_regions<R: BufRead>(input: R) -> Result<Vec<ClusterRegion>, GeoError> {
    let mut regions = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |reason: String| GeoError::BadRegionsLine { line: idx + 1, reason };
        let rec: RegionRecord = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
        let hull = rec
            .hull
            .iter()
            .map(|[lat, lon]| GeoPoint { lat: *lat, lon: *lon })
            .collect();
        let region = ClusterRegion::new(rec.id, rec.label, hull).map_err(|e| bad(e.to_string()))?;
        if regions.iter().any(|r: &ClusterRegion| r.id == region.id) {
            return Err(bad(format!("duplicate region id {}", region.id)));
        }
        regions.push(region);
    }
    Ok(regions)
}
