use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::Args;
use qdart_core::diversity::{fit_reduction, read_features, Descriptor, FeatureVector, ReducedMap};
use qdart_core::fitness::proxy_selection;
use qdart_core::image::GrayImage;
use qdart_core::metrics::{batch_metrics, MetricTable};
use qdart_core::qd::fit_random_map;
use qdart_core::ranking::{Outcome, Tournament, DEFAULT_BATCH_SIZE};
use rayon::prelude::*;
use serde::Deserialize;

use crate::ConfigArg;

#[derive(Args)]
pub struct MetricsArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// CSV output; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load_metrics(corpus: &Path) -> anyhow::Result<MetricTable> {
    let table = batch_metrics(corpus)?;
    for (path, reason) in &table.failures {
        tracing::warn!("skipped {}: {reason}", path.display());
    }
    Ok(table)
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn metrics(args: MetricsArgs) -> anyhow::Result<()> {
    let table = load_metrics(&args.corpus)?;
    emit(args.out.as_deref(), &table.to_csv())
}

#[derive(Args)]
pub struct CorrelateArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Direct scores: CSV `id,score`, or JSONL lines with `id` and `score`.
    #[arg(long)]
    scores: Option<PathBuf>,
    /// Pairwise outcome log (JSONL), replayed through Glicko.
    #[arg(long)]
    outcomes: Option<PathBuf>,
    /// Output prefix; writes `<prefix>.csv` and `<prefix>.txt`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Deserialize)]
struct ScoreRow {
    id: String,
    score: f64,
}

fn read_scores(path: &Path) -> anyhow::Result<BTreeMap<String, f64>> {
    let ctx = || format!("cannot read scores from {}", path.display());
    let mut scores = BTreeMap::new();
    if path.extension().is_some_and(|e| e == "jsonl" || e == "json") {
        let file = std::fs::File::open(path).with_context(ctx)?;
        for (n, line) in std::io::BufReader::new(file).lines().enumerate() {
            let line = line.with_context(ctx)?;
            if line.trim().is_empty() {
                continue;
            }
            let row: ScoreRow = serde_json::from_str(&line).with_context(|| format!("{}:{}", path.display(), n + 1))?;
            scores.insert(row.id, row.score);
        }
    } else {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_path(path).with_context(ctx)?;
        for row in reader.deserialize::<ScoreRow>() {
            let row = row.with_context(ctx)?;
            scores.insert(row.id, row.score);
        }
    }
    Ok(scores)
}

/// Final Glicko ratings from an outcome log. Ids absent from the corpus
/// still take part in the replay.
fn read_ratings(path: &Path, corpus_ids: &[&str]) -> anyhow::Result<BTreeMap<String, f64>> {
    let file = std::fs::File::open(path).with_context(|| format!("cannot read outcomes from {}", path.display()))?;
    let mut log = Vec::new();
    for (n, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        if !line.trim().is_empty() {
            log.push(serde_json::from_str::<Outcome>(&line).with_context(|| format!("{}:{}", path.display(), n + 1))?);
        }
    }
    let mut ids: BTreeSet<String> = corpus_ids.iter().map(|s| s.to_string()).collect();
    for o in &log {
        ids.insert(o.a.clone());
        ids.insert(o.b.clone());
    }
    let t = Tournament::replay(ids, log, DEFAULT_BATCH_SIZE)?;
    Ok(t.ratings().into_iter().filter(|r| r.games > 0).map(|r| (r.image_id, r.rating)).collect())
}

pub fn correlate(args: CorrelateArgs) -> anyhow::Result<()> {
    if args.scores.is_none() && args.outcomes.is_none() {
        bail!("give --scores, --outcomes, or both");
    }
    let table = load_metrics(&args.corpus)?;
    let ids: Vec<&str> = table.rows.iter().map(|(id, _)| id.as_str()).collect();
    let scores = args.scores.as_deref().map(read_scores).transpose()?;
    let ratings = args.outcomes.as_deref().map(|p| read_ratings(p, &ids)).transpose()?;
    let report = proxy_selection(&table.rows, scores.as_ref(), ratings.as_ref())?;
    if !report.missing_ids.is_empty() {
        tracing::warn!(
            "{} id(s) missing from some inputs; using the {} shared: {}",
            report.missing_ids.len(),
            report.n,
            report.missing_ids.join(", ")
        );
    }
    match &args.out {
        Some(prefix) => {
            let with = |ext: &str| {
                let mut s = prefix.as_os_str().to_owned();
                s.push(ext);
                PathBuf::from(s)
            };
            emit(Some(&with(".csv")), &report.to_csv())?;
            emit(Some(&with(".txt")), &report.to_text())?;
            print!("{}", report.to_text());
        }
        None => print!("{}", report.to_text()),
    }
    Ok(())
}

#[derive(Args)]
pub struct FitMapArgs {
    /// External feature vectors (JSONL `{id, values}`), e.g. CNN embeddings.
    #[arg(long, conflicts_with = "corpus")]
    features: Option<PathBuf>,
    /// Describe every PNG in this directory with the built-in descriptor.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Number of random drawings to fit on when neither source is given.
    #[arg(long, default_value_t = 738)]
    samples: usize,
    #[arg(long, env = "QDA_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    grid_n: Option<usize>,
    #[arg(long, default_value = "map.json")]
    out: PathBuf,
    #[command(flatten)]
    config: ConfigArg,
}

fn describe_corpus(dir: &Path, descriptor: &Descriptor) -> anyhow::Result<Vec<FeatureVector>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("cannot read {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "png"))
        .collect();
    files.sort();
    files
        .par_iter()
        .map(|p| {
            let img = GrayImage::load(p)?;
            descriptor.describe(&img).with_context(|| format!("{}", p.display()))
        })
        .collect()
}

pub fn fit_map(args: FitMapArgs) -> anyhow::Result<()> {
    let mut cfg = args.config.load()?;
    if let Some(n) = args.grid_n {
        cfg.grid_n = n;
    }
    let map: ReducedMap = match (&args.features, &args.corpus) {
        (Some(path), _) => {
            let rows = read_features(path)?;
            tracing::info!("fitting on {} imported feature vectors", rows.len());
            fit_reduction(&rows.into_iter().map(|(_, v)| v).collect::<Vec<_>>(), cfg.grid_n)?
        }
        (None, Some(dir)) => {
            let features = describe_corpus(dir, &Descriptor { canvas: cfg.canvas })?;
            tracing::info!("fitting on {} corpus images", features.len());
            fit_reduction(&features, cfg.grid_n)?
        }
        (None, None) => {
            tracing::info!("fitting on {} random drawings (seed {})", args.samples, args.seed);
            fit_random_map(&cfg, args.samples, args.seed)?
        }
    };
    map.save(&args.out)?;
    tracing::info!("wrote {} (d={}, grid {}x{})", args.out.display(), map.d, map.grid_n, map.grid_n);
    Ok(())
}
