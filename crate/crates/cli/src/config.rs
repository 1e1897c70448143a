//! Pipeline configuration file (TOML, `version = 1`).
//!
//! ```toml
//! version = 1
//! seed = 0
//!
//! [paths]              # relative paths resolve against the config file
//! messages = "messages.jsonl"
//! regions = "regions.jsonl"
//! groups = "groups.json"
//! news = "news.jsonl"          # optional
//! noise_model = "noise.json"   # optional
//! stopwords = "stop.txt"       # optional, replaces the bundled list
//! stemmer_rules = "rules.txt"  # optional, replaces the bundled table
//!
//! [cluster]
//! eps = 0.05
//! min_pts = 5
//! metric = "euclidean"  # or "haversine" (eps in km)
//!
//! [detect]
//! mu_threshold = 4.0
//! ratio_threshold = 1.5
//! c2_window = 7
//! c2_guard = 0
//! sigma = 3.0
//! warmup_days = 28
//!
//! [summarise]
//! pcss_threshold = -0.08
//! alpha = 0.05
//! min_gist = 30
//! df_gate = 0.05
//! baseline_days = 28
//! ```
//!
//! Unknown keys are rejected. Every section is optional and defaults to the
//! values above, except that `[cluster]` has no defaults for `eps`/`min_pts`.

use std::path::{Path, PathBuf};

use burstwatch::geo::Metric;
use burstwatch::surveillance::{C2Config, DetectionConfig, EventThresholds, MIN_MU_HISTORY};
use burstwatch::tnt::TntConfig;
use serde::Deserialize;

use crate::CliError;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    pub messages: Option<PathBuf>,
    pub regions: Option<PathBuf>,
    pub groups: Option<PathBuf>,
    pub news: Option<PathBuf>,
    pub noise_model: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub stemmer_rules: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum MetricName {
    #[default]
    Euclidean,
    Haversine,
}

impl From<MetricName> for Metric {
    fn from(m: MetricName) -> Self {
        match m {
            MetricName::Euclidean => Metric::Euclidean,
            MetricName::Haversine => Metric::Haversine,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterSection {
    pub eps: Option<f64>,
    pub min_pts: Option<usize>,
    #[serde(default)]
    pub metric: MetricName,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectSection {
    pub mu_threshold: f64,
    pub ratio_threshold: f64,
    pub c2_window: usize,
    pub c2_guard: usize,
    pub sigma: f64,
    pub warmup_days: usize,
}

impl Default for DetectSection {
    fn default() -> Self {
        let d = DetectionConfig::default();
        Self {
            mu_threshold: d.thresholds.mu_threshold,
            ratio_threshold: d.thresholds.ratio_threshold,
            c2_window: d.c2.window,
            c2_guard: d.c2.guard,
            sigma: d.c2.sigma,
            warmup_days: d.warmup_days,
        }
    }
}

impl DetectSection {
    pub fn to_config(&self) -> DetectionConfig {
        DetectionConfig {
            c2: C2Config {
                window: self.c2_window,
                guard: self.c2_guard,
                sigma: self.sigma,
            },
            thresholds: EventThresholds {
                mu_threshold: self.mu_threshold,
                ratio_threshold: self.ratio_threshold,
            },
            warmup_days: self.warmup_days,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SummariseSection {
    pub pcss_threshold: f64,
    pub alpha: f64,
    pub min_gist: usize,
    pub df_gate: f64,
    pub baseline_days: u64,
}

impl Default for SummariseSection {
    fn default() -> Self {
        let t = TntConfig::default();
        Self {
            pcss_threshold: t.pcss_threshold,
            alpha: t.alpha,
            min_gist: t.min_gist,
            df_gate: t.df_gate,
            baseline_days: t.baseline_days,
        }
    }
}

impl SummariseSection {
    pub fn to_config(&self) -> TntConfig {
        TntConfig {
            pcss_threshold: self.pcss_threshold,
            alpha: self.alpha,
            min_gist: self.min_gist,
            df_gate: self.df_gate,
            baseline_days: self.baseline_days,
            ..TntConfig::default()
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub version: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub paths: Paths,
    #[serde(default)]
    pub cluster: ClusterSection,
    #[serde(default)]
    pub detect: DetectSection,
    #[serde(default)]
    pub summarise: SummariseSection,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            seed: 0,
            paths: Paths::default(),
            cluster: ClusterSection::default(),
            detect: DetectSection::default(),
            summarise: SummariseSection::default(),
            base_dir: PathBuf::from("."),
        }
    }
}

fn check(errs: &mut Vec<String>, ok: bool, msg: &str) {
    if !ok {
        errs.push(msg.to_string());
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let mut cfg: Self = toml::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.validate()
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        Ok(cfg)
    }

    /// Range checks on every threshold.
    pub fn validate(&self) -> Result<(), String> {
        let mut errs = Vec::new();
        if self.version != CONFIG_VERSION {
            errs.push(format!("version must be {CONFIG_VERSION}, got {}", self.version));
        }
        if let Some(eps) = self.cluster.eps {
            check(&mut errs, eps > 0.0 && eps.is_finite(), "cluster.eps must be positive");
        }
        if let Some(m) = self.cluster.min_pts {
            check(&mut errs, m >= 1, "cluster.min_pts must be at least 1");
        }
        let d = &self.detect;
        check(
            &mut errs,
            d.mu_threshold.is_finite() && d.mu_threshold >= 0.0,
            "detect.mu_threshold must be >= 0",
        );
        check(
            &mut errs,
            d.ratio_threshold.is_finite() && d.ratio_threshold >= 1.0,
            "detect.ratio_threshold must be >= 1",
        );
        check(&mut errs, d.c2_window >= 2, "detect.c2_window must be at least 2");
        check(
            &mut errs,
            d.sigma.is_finite() && d.sigma > 0.0,
            "detect.sigma must be positive",
        );
        check(
            &mut errs,
            d.warmup_days >= d.c2_window + d.c2_guard && d.warmup_days >= MIN_MU_HISTORY,
            "detect.warmup_days must cover the C2 baseline and the spike-score history",
        );
        let s = &self.summarise;
        check(
            &mut errs,
            (-1.0..=1.0).contains(&s.pcss_threshold),
            "summarise.pcss_threshold must be within [-1, 1]",
        );
        check(
            &mut errs,
            s.alpha > 0.0 && s.alpha <= 1.0,
            "summarise.alpha must be within (0, 1]",
        );
        check(&mut errs, s.min_gist >= 1, "summarise.min_gist must be at least 1");
        check(
            &mut errs,
            (0.0..=1.0).contains(&s.df_gate),
            "summarise.df_gate must be within [0, 1]",
        );
        check(
            &mut errs,
            s.baseline_days >= 1,
            "summarise.baseline_days must be at least 1",
        );
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs.join("; "))
        }
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// A required path, resolved.
    pub fn require(&self, field: &str, p: &Option<PathBuf>) -> Result<PathBuf, CliError> {
        p.as_deref()
            .map(|p| self.resolve(p))
            .ok_or_else(|| CliError::Input(format!("paths.{field} is not set")))
    }
}
