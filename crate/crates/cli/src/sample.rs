use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context};
use clap::Args;
use qdart_core::draw::{develop, to_svg, Canvas, Rendering};
use qdart_core::genome::{decode, random_genotype, Genotype};
use qdart_core::rng::derive_seed;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::ConfigArg;

pub const MANIFEST: &str = "manifest.json";

#[derive(Args)]
pub struct SampleArgs {
    /// Number of drawings.
    #[arg(short, long, default_value_t = 257)]
    n: usize,
    #[arg(long, env = "QDA_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    config: ConfigArg,
}

#[derive(Serialize)]
struct ManifestRow {
    id: String,
    /// Seed of the random genotype.
    seed: u64,
    genotype: Genotype,
    png: String,
    svg: String,
}

#[derive(Serialize)]
struct Manifest {
    seed: u64,
    canvas: Canvas,
    images: Vec<ManifestRow>,
    meta: Value,
}

fn write(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    std::fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))
}

fn with_ext(stem: &Path, ext: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    s.into()
}

fn save(r: &Rendering, stem: &Path) -> anyhow::Result<()> {
    write(&with_ext(stem, "svg"), &to_svg(&r.phenotype))?;
    write(&with_ext(stem, "png"), &r.raster.to_png()?)
}

/// Genotypes whose border leaves no drawable area are skipped, so the corpus
/// always holds exactly `n` drawings.
pub fn sample(args: SampleArgs) -> anyhow::Result<()> {
    if args.n == 0 {
        bail!("--n must be at least 1");
    }
    let cfg = args.config.load()?;
    std::fs::create_dir_all(&args.out).with_context(|| format!("cannot create {}", args.out.display()))?;
    let (mut rows, mut attempt) = (Vec::with_capacity(args.n), 0u64);
    while rows.len() < args.n {
        let want = args.n - rows.len();
        let batch: Vec<u64> = (attempt..attempt + want as u64).map(|k| derive_seed(args.seed, k)).collect();
        attempt += want as u64;
        let rendered: Vec<(u64, Option<Rendering>)> =
            batch.into_par_iter().map(|s| (s, develop(&random_genotype(s), &cfg.gene_ranges, cfg.canvas).ok())).collect();
        for (s, r) in rendered {
            let Some(r) = r else { continue };
            let id = format!("img{:04}", rows.len());
            save(&r, &args.out.join(&id))?;
            rows.push(ManifestRow { png: format!("{id}.png"), svg: format!("{id}.svg"), id, seed: s, genotype: random_genotype(s) });
        }
    }
    let created = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let manifest = Manifest { seed: args.seed, canvas: cfg.canvas, images: rows, meta: serde_json::json!({ "created_unix": created }) };
    write(&args.out.join(MANIFEST), &serde_json::to_vec_pretty(&manifest)?)?;
    tracing::info!("wrote {} drawings to {} ({} genotypes drawn)", args.n, args.out.display(), attempt);
    Ok(())
}

#[derive(Args)]
pub struct RenderArgs {
    /// Genotype as a JSON array, or a JSON file holding an array or an
    /// object with a `genotype` field.
    #[arg(long, conflicts_with = "seed", required_unless_present = "seed")]
    genotype: Option<String>,
    /// Render the random genotype for this seed instead.
    #[arg(long)]
    seed: Option<u64>,
    /// Output path stem; `.svg` and `.png` are appended.
    #[arg(long)]
    out: PathBuf,
    /// Also print the decoded drawing parameters.
    #[arg(long)]
    params: bool,
    #[command(flatten)]
    config: ConfigArg,
}

fn parse_genotype(arg: &str) -> anyhow::Result<Genotype> {
    let text = if arg.trim_start().starts_with('[') {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg).with_context(|| format!("cannot read genotype file {arg}"))?
    };
    let mut value: Value = serde_json::from_str(&text).context("genotype is not valid JSON")?;
    if let Some(inner) = value.get_mut("genotype") {
        value = inner.take();
    }
    serde_json::from_value(value).context("expected an array of 17 genes in [0, 1]")
}

pub fn render(args: RenderArgs) -> anyhow::Result<()> {
    let cfg = args.config.load()?;
    let g = match (&args.genotype, args.seed) {
        (Some(text), _) => parse_genotype(text)?,
        (None, Some(seed)) => random_genotype(seed),
        (None, None) => unreachable!("clap requires one of --genotype, --seed"),
    };
    if args.params {
        println!("{}", serde_json::to_string_pretty(&decode(&g, &cfg.gene_ranges))?);
    }
    let r = develop(&g, &cfg.gene_ranges, cfg.canvas)?;
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    save(&r, &args.out)?;
    tracing::info!("mean intensity {:.4}", r.raster.mean());
    Ok(())
}
