use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use burstwatch::eval::{
    evaluation_set, gen_synthetic as generate, read_labeled_alarms, sweep_mu_threshold, threshold_grid,
    write_sweep_csv, SyntheticConfig, SyntheticCorpus,
};
use burstwatch::geo::{dbscan, read_regions, regions_from_labels, write_regions, GeoPoint, RegionIndex};
use burstwatch::ingest::{parse_groups, parse_messages, Corpus, Ingestor, KeywordGroup, LinearNoiseModel};
use burstwatch::newsstore::NewsStore;
use burstwatch::pipeline::{self, AlarmRecord, Outcome};
use burstwatch::textvec::{LancasterStemmer, StopwordSet};
use burstwatch::tnt::TextResources;
use burstwatch::Event;
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::CliError;

fn input_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path).map(BufReader::new).map_err(|e| input_err(path, e))
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| input_err(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| input_err(path, e))
}

fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    let mut w = create(path)?;
    let io = |e: std::io::Error| CliError::Internal(format!("{}: {e}", path.display()));
    for row in rows {
        serde_json::to_writer(&mut w, row).map_err(|e| CliError::Internal(e.to_string()))?;
        w.write_all(b"\n").map_err(io)?;
    }
    w.flush().map_err(io)
}

fn report_rejects(path: &Path, rejects: &[burstwatch::ingest::Reject]) {
    if rejects.is_empty() {
        return;
    }
    eprintln!("{}: {} lines rejected", path.display(), rejects.len());
    for r in rejects.iter().take(10) {
        eprintln!("  line {}: {}", r.line, r.reason);
    }
}

#[derive(Deserialize)]
struct PointRecord {
    lat: f64,
    lon: f64,
}

pub fn cluster(cfg: &PipelineConfig, points_path: &Path, out: &Path) -> Result<(), CliError> {
    let eps = cfg
        .cluster
        .eps
        .ok_or_else(|| CliError::Input("--eps (or cluster.eps) is required".into()))?;
    let min_pts = cfg
        .cluster
        .min_pts
        .ok_or_else(|| CliError::Input("--min-pts (or cluster.min_pts) is required".into()))?;
    let mut points = Vec::new();
    for (idx, line) in open(points_path)?.lines().enumerate() {
        let line = line.map_err(|e| input_err(points_path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: PointRecord =
            serde_json::from_str(&line).map_err(|e| input_err(points_path, format!("line {}: {e}", idx + 1)))?;
        let p = GeoPoint::new(rec.lat, rec.lon)
            .ok_or_else(|| input_err(points_path, format!("line {}: coordinates out of range", idx + 1)))?;
        points.push(p);
    }
    if points.len() < min_pts {
        return Err(input_err(
            points_path,
            format!("{} points, fewer than min_pts = {min_pts}", points.len()),
        ));
    }
    let labels =
        dbscan(&points, eps, min_pts, cfg.cluster.metric.into()).map_err(|e| CliError::Input(e.to_string()))?;
    let regions = regions_from_labels(&points, &labels);
    if regions.is_empty() {
        return Err(input_err(points_path, "no clusters found; every point is noise"));
    }
    let index = RegionIndex::new(&regions);
    let covered = points.iter().filter(|p| index.assign(p).region().is_some()).count();
    let mut w = create(out)?;
    write_regions(&mut w, &regions)
        .and_then(|_| w.flush())
        .map_err(|e| CliError::Internal(format!("{}: {e}", out.display())))?;
    println!(
        "{} regions; {covered}/{} points inside a region ({:.1}%)",
        regions.len(),
        points.len(),
        100.0 * covered as f64 / points.len() as f64
    );
    Ok(())
}

struct Inputs {
    groups: Vec<KeywordGroup>,
    regions: RegionIndex,
    corpus: Corpus,
}

fn load_inputs(cfg: &PipelineConfig) -> Result<Inputs, CliError> {
    let groups_path = cfg.require("groups", &cfg.paths.groups)?;
    let groups = parse_groups(&read_text(&groups_path)?).map_err(|e| input_err(&groups_path, e))?;
    let regions_path = cfg.require("regions", &cfg.paths.regions)?;
    let regions = read_regions(open(&regions_path)?).map_err(|e| input_err(&regions_path, e))?;
    let model = match &cfg.paths.noise_model {
        Some(p) => {
            let p = cfg.resolve(p);
            Some(LinearNoiseModel::parse(&read_text(&p)?).map_err(|e| input_err(&p, e))?)
        }
        None => None,
    };
    let messages_path = cfg.require("messages", &cfg.paths.messages)?;
    let parsed = parse_messages(open(&messages_path)?).map_err(|e| input_err(&messages_path, e))?;
    report_rejects(&messages_path, &parsed.rejects);
    let regions = RegionIndex::new(&regions);
    let corpus = Ingestor::new(&groups, &regions, model.as_ref()).process(parsed.messages);
    Ok(Inputs {
        groups,
        regions,
        corpus,
    })
}

pub fn ingest(cfg: &PipelineConfig, out: &Path) -> Result<(), CliError> {
    let inputs = load_inputs(cfg)?;
    let range = pipeline::corpus_range(&inputs.corpus)
        .ok_or_else(|| CliError::Input("no valid messages in the messages file".into()))?;
    let table = inputs.corpus.count_series(range);
    let series: Vec<_> = table.series.into_values().collect();
    write_jsonl(out, &series)?;
    println!(
        "{} series over {}..{}; {} matched messages kept, {} in no region, {} dropped by the noise filter",
        series.len(),
        range.start,
        range.end,
        inputs.corpus.messages().len(),
        inputs.corpus.noise_region_count(),
        inputs.corpus.dropped_by_filter()
    );
    Ok(())
}

pub fn detect(cfg: &PipelineConfig, out: &Path) -> Result<(), CliError> {
    let inputs = load_inputs(cfg)?;
    let detection = pipeline::detect(&inputs.corpus, &inputs.groups, &inputs.regions, &cfg.detect.to_config())
        .map_err(|e| CliError::Input(e.to_string()))?;
    write_jsonl(out, &detection.alarms)?;
    for rec in detection.alarms.iter().filter(|r| r.outcome == Outcome::Event) {
        println!(
            "{} {}..{} mu_max={:.2} ratio={:.2}",
            rec.event_id, rec.alarm.start_date, rec.alarm.end_date, rec.alarm.mu_max, rec.alarm.tweet_user_ratio
        );
    }
    eprintln!("{} alarms, {} events", detection.alarms.len(), detection.events.len());
    Ok(())
}

fn text_resources(cfg: &PipelineConfig) -> Result<TextResources, CliError> {
    let mut res = TextResources::default();
    if let Some(p) = &cfg.paths.stopwords {
        res.stopwords = StopwordSet::parse(&read_text(&cfg.resolve(p))?);
    }
    if let Some(p) = &cfg.paths.stemmer_rules {
        let p = cfg.resolve(p);
        res.stemmer = LancasterStemmer::from_rules(&read_text(&p)?).map_err(|e| input_err(&p, e))?;
    }
    Ok(res)
}

pub fn summarise(cfg: &PipelineConfig, events_path: &Path, out: &Path) -> Result<(), CliError> {
    let mut events = Vec::new();
    for (idx, line) in open(events_path)?.lines().enumerate() {
        let line = line.map_err(|e| input_err(events_path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: AlarmRecord =
            serde_json::from_str(&line).map_err(|e| input_err(events_path, format!("line {}: {e}", idx + 1)))?;
        if rec.outcome == Outcome::Event {
            events.push(rec);
        }
    }
    let res = text_resources(cfg)?;
    let inputs = load_inputs(cfg)?;
    let store = match &cfg.paths.news {
        Some(p) => {
            let p = cfg.resolve(p);
            let (store, rejects) = NewsStore::ingest(open(&p)?).map_err(|e| input_err(&p, e))?;
            report_rejects(&p, &rejects);
            Some(store)
        }
        None => None,
    };
    let events: Vec<Event> = events
        .into_iter()
        .map(|rec| Event {
            gist: burstwatch::tnt::fetch_gist(&inputs.corpus, &rec.alarm)
                .iter()
                .map(|m| m.id.clone())
                .collect(),
            id: rec.event_id,
            keyword: rec.keyword,
            region_label: rec.region_label,
            alarm: rec.alarm,
        })
        .collect();
    let summaries = pipeline::summarise_events(
        &events,
        &inputs.corpus,
        store.as_ref(),
        &res,
        &cfg.summarise.to_config(),
    );
    write_jsonl(out, &summaries)?;
    for s in &summaries {
        let status = serde_json::to_value(s.status).map_err(|e| CliError::Internal(e.to_string()))?;
        println!(
            "{} {} gist={} good_terms=[{}] articles={}",
            s.event_id,
            status.as_str().unwrap_or("?"),
            s.gist_size,
            s.good_terms.join(", "),
            s.articles.len()
        );
    }
    Ok(())
}

fn parse_thresholds(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Input(format!("--thresholds: cannot parse {spec:?}"));
    let num = |s: &str| s.trim().parse::<f64>().ok().filter(|v| v.is_finite());
    let parts: Vec<&str> = spec.split(':').collect();
    let grid = if parts.len() == 3 {
        let (lo, hi, step) = (
            num(parts[0]).ok_or_else(bad)?,
            num(parts[1]).ok_or_else(bad)?,
            num(parts[2]).ok_or_else(bad)?,
        );
        if step <= 0.0 || hi < lo {
            return Err(bad());
        }
        threshold_grid(lo, hi, step)
    } else {
        spec.split(',')
            .map(|s| num(s).ok_or_else(bad))
            .collect::<Result<_, _>>()?
    };
    if grid.is_empty() {
        return Err(bad());
    }
    Ok(grid)
}

pub fn evaluate(fixture: Option<&Path>, thresholds: &str, out: Option<&Path>) -> Result<(), CliError> {
    let alarms = match fixture {
        Some(p) => read_labeled_alarms(open(p)?).map_err(|e| input_err(p, e))?,
        None => evaluation_set(),
    };
    let rows = sweep_mu_threshold(&alarms, &parse_thresholds(thresholds)?);
    let internal = |e: burstwatch::eval::EvalError| CliError::Internal(e.to_string());
    match out {
        Some(p) => write_sweep_csv(create(p)?, &rows).map_err(internal)?,
        None => write_sweep_csv(std::io::stdout().lock(), &rows).map_err(internal)?,
    }
    if let Some(best) = rows
        .iter()
        .max_by(|a, b| a.f_beta.total_cmp(&b.f_beta).then(b.threshold.total_cmp(&a.threshold)))
    {
        eprintln!(
            "{} alarms; best F1 {:.4} at threshold {}",
            alarms.len(),
            best.f_beta,
            best.threshold
        );
    }
    Ok(())
}

const PIPELINE_TEMPLATE: &str = "version = 1\nseed = {seed}\n\n[paths]\nmessages = \"messages.jsonl\"\nregions = \"regions.jsonl\"\ngroups = \"groups.json\"\nnews = \"news.jsonl\"\n";

pub fn gen_synthetic(spec: &Path, out_dir: &Path, seed: u64) -> Result<(), CliError> {
    let cfg: SyntheticConfig = toml::from_str(&read_text(spec)?).map_err(|e| input_err(spec, e))?;
    let corpus = generate(&cfg, seed).map_err(|e| input_err(spec, e))?;
    std::fs::create_dir_all(out_dir).map_err(|e| input_err(out_dir, e))?;
    corpus
        .write_to(out_dir)
        .map_err(|e| CliError::Internal(format!("{}: {e}", out_dir.display())))?;
    std::fs::write(
        out_dir.join("pipeline.toml"),
        PIPELINE_TEMPLATE.replace("{seed}", &seed.to_string()),
    )
    .map_err(|e| input_err(out_dir, e))?;
    println!(
        "{} messages, {} articles, {} planted events in {} ({}, {}, ...)",
        corpus.messages.len(),
        corpus.articles.len(),
        corpus.truth.len(),
        out_dir.display(),
        SyntheticCorpus::MESSAGES,
        SyntheticCorpus::TRUTH
    );
    Ok(())
}
