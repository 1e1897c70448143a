use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;

use config::{MetricName, PipelineConfig};

/// Geo-temporal event detection over keyword-classed message streams.
#[derive(Debug, Parser)]
#[command(name = "burstwatch", version)]
struct Cli {
    /// Pipeline configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every random choice (only synthetic generation draws any).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; output does not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// DBSCAN over point coordinates, writing convex-hull regions.
    Cluster {
        /// JSONL with `lat` and `lon` fields per line (a messages file works).
        #[arg(long)]
        points: PathBuf,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        min_pts: Option<usize>,
        #[arg(long, value_enum)]
        metric: Option<MetricName>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Parse, match and count messages into daily series.
    Ingest {
        #[arg(long)]
        out: PathBuf,
    },
    /// Run C2/C3 over every series and classify alarms.
    Detect {
        #[command(flatten)]
        flags: DetectFlags,
        #[arg(long)]
        out: PathBuf,
    },
    /// Summarise the events of an alarms file.
    Summarise {
        #[arg(long)]
        events: PathBuf,
        #[command(flatten)]
        flags: SummariseFlags,
        #[arg(long)]
        out: PathBuf,
    },
    /// mu_max threshold sweep over a labelled alarm fixture.
    Evaluate {
        /// Defaults to the bundled 33-alarm evaluation set.
        #[arg(long)]
        fixture: Option<PathBuf>,
        /// `lo:hi:step` or a comma-separated list.
        #[arg(long, default_value = "0:20:1")]
        thresholds: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a seeded synthetic corpus and a matching pipeline config.
    GenSynthetic {
        /// Generator config (TOML).
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Debug, Clone, Default, Args)]
struct DetectFlags {
    #[arg(long)]
    mu_threshold: Option<f64>,
    #[arg(long)]
    ratio_threshold: Option<f64>,
    #[arg(long)]
    c2_window: Option<usize>,
    #[arg(long)]
    c2_guard: Option<usize>,
    #[arg(long)]
    sigma: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
struct SummariseFlags {
    #[arg(long, allow_hyphen_values = true)]
    pcss_threshold: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    min_gist: Option<usize>,
    #[arg(long)]
    df_gate: Option<f64>,
    #[arg(long)]
    baseline_days: Option<u64>,
}

#[derive(Debug)]
pub enum CliError {
    /// Bad input, config or missing file: exit 2.
    Input(String),
    /// Anything else: exit 1.
    Internal(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Internal(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

fn apply_detect(cfg: &mut PipelineConfig, f: &DetectFlags) {
    let d = &mut cfg.detect;
    d.mu_threshold = f.mu_threshold.unwrap_or(d.mu_threshold);
    d.ratio_threshold = f.ratio_threshold.unwrap_or(d.ratio_threshold);
    d.c2_window = f.c2_window.unwrap_or(d.c2_window);
    d.c2_guard = f.c2_guard.unwrap_or(d.c2_guard);
    d.sigma = f.sigma.unwrap_or(d.sigma);
}

fn apply_summarise(cfg: &mut PipelineConfig, f: &SummariseFlags) {
    let s = &mut cfg.summarise;
    s.pcss_threshold = f.pcss_threshold.unwrap_or(s.pcss_threshold);
    s.alpha = f.alpha.unwrap_or(s.alpha);
    s.min_gist = f.min_gist.unwrap_or(s.min_gist);
    s.df_gate = f.df_gate.unwrap_or(s.df_gate);
    s.baseline_days = f.baseline_days.unwrap_or(s.baseline_days);
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Input("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Internal(e.to_string()))?;
    }
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let needs_config = matches!(
        cli.command,
        Command::Ingest { .. } | Command::Detect { .. } | Command::Summarise { .. }
    );
    if needs_config && cli.config.is_none() {
        return Err(CliError::Input("this command needs --config".into()));
    }
    match cli.command {
        Command::Cluster {
            points,
            eps,
            min_pts,
            metric,
            out,
        } => {
            cfg.cluster.eps = eps.or(cfg.cluster.eps);
            cfg.cluster.min_pts = min_pts.or(cfg.cluster.min_pts);
            cfg.cluster.metric = metric.unwrap_or(cfg.cluster.metric);
            cfg.validate().map_err(CliError::Input)?;
            commands::cluster(&cfg, &points, &out)
        }
        Command::Ingest { out } => commands::ingest(&cfg, &out),
        Command::Detect { flags, out } => {
            apply_detect(&mut cfg, &flags);
            cfg.validate().map_err(CliError::Input)?;
            commands::detect(&cfg, &out)
        }
        Command::Summarise { events, flags, out } => {
            apply_summarise(&mut cfg, &flags);
            cfg.validate().map_err(CliError::Input)?;
            commands::summarise(&cfg, &events, &out)
        }
        Command::Evaluate {
            fixture,
            thresholds,
            out,
        } => commands::evaluate(fixture.as_deref(), &thresholds, out.as_deref()),
        Command::GenSynthetic { spec, out_dir } => commands::gen_synthetic(&spec, &out_dir, cfg.seed),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("burstwatch: {e}");
            ExitCode::from(e.code())
        }
    }
}
