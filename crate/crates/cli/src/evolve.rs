use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::Args;
use qdart_core::diversity::ReducedMap;
use qdart_core::draw::develop;
use qdart_core::image::GrayImage;
use qdart_core::qd::{archive_checksum, stats_csv, write_montage, Elite, EliteGrid, Engine, Run, RunDir, ARTIFACT_DIR};
use serde::Serialize;

use crate::ConfigArg;

/// Copy of the feature map kept next to the checkpoint so a run can resume
/// without the original file.
const RUN_MAP_FILE: &str = "map.json";

#[derive(Args)]
pub struct EvolveArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// Feature map from `qdart fit-map`; overrides the config's `map`.
    #[arg(long, env = "QDA_MAP")]
    map: Option<PathBuf>,
    #[arg(long, env = "QDA_SEED")]
    seed: Option<u64>,
    #[arg(long)]
    grid_n: Option<usize>,
    #[arg(long)]
    generations: Option<usize>,
    /// Run directory.
    #[arg(long, default_value = "run")]
    out: PathBuf,
    /// Continue the run in `--out` from its last checkpoint.
    #[arg(long)]
    resume: bool,
}

fn load_map(path: &Path) -> anyhow::Result<ReducedMap> {
    ReducedMap::load(path).with_context(|| format!("cannot load feature map {}", path.display()))
}

pub fn evolve(args: EvolveArgs) -> anyhow::Result<()> {
    let engine = if args.resume {
        let mut cfg = RunDir::new(&args.out).load_checkpoint()?.config;
        if let Some(g) = args.generations {
            cfg.generations = g;
        }
        let map = load_map(&args.map.clone().unwrap_or_else(|| args.out.join(RUN_MAP_FILE)))?;
        Engine::new(cfg, map)?
    } else {
        let mut cfg = args.config.load()?;
        if let Some(s) = args.seed {
            cfg.seed = s;
        }
        if let Some(n) = args.grid_n {
            cfg.grid_n = n;
        }
        if let Some(g) = args.generations {
            cfg.generations = g;
        }
        cfg.validate()?;
        let Some(map_path) = args.map.clone().or_else(|| cfg.map.clone()) else {
            bail!("no feature map given; create one with `qdart fit-map --out map.json` and pass `--map map.json`");
        };
        let map = load_map(&map_path)?;
        cfg.map = Some(PathBuf::from(RUN_MAP_FILE));
        Engine::new(cfg, map)?
    };

    let mut run = if args.resume {
        let run = Run::resume(&engine, &args.out)?;
        if run.is_finished() {
            eprintln!("run in {} already finished {} generations; nothing to do", args.out.display(), run.state().next_generation);
        }
        run
    } else {
        let run = Run::create(&engine, &args.out)?;
        engine.map().save(&args.out.join(RUN_MAP_FILE))?;
        run
    };

    let total = engine.config().generations;
    run.run_to_end(|r| {
        for (k, reason) in &r.failures {
            tracing::debug!("generation {} child {k} failed: {reason}", r.generation);
        }
        let (occupancy, mean) = r.stats.map_or((0.0, 0.0), |s| (s.occupancy, s.mean_fitness));
        tracing::info!(
            "generation {}/{total}: occupancy {occupancy:.3}, mean fitness {mean:.4}, placed {}, failed {}",
            r.generation + 1,
            r.placed.len(),
            r.failures.len()
        );
    })?;
    run.export_montage()?;
    let state = run.state();
    println!(
        "{} elites in {} of {} cells, mean fitness {:.4}",
        state.archive.len(),
        state.grid.occupancy(),
        state.grid.grid_n * state.grid.grid_n,
        state.grid.mean_fitness()
    );
    println!("archive sha256 {}", archive_checksum(&state.archive));
    Ok(())
}

#[derive(Args)]
pub struct ExportArgs {
    /// Run directory written by `qdart evolve`.
    #[arg(long)]
    run: PathBuf,
    /// Output directory; defaults to `<run>/export`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Generations to snapshot (comma separated); defaults to the last one.
    #[arg(long, value_delimiter = ',')]
    at: Vec<usize>,
}

#[derive(Serialize)]
struct GridEntry<'a> {
    i: usize,
    j: usize,
    #[serde(flatten)]
    elite: &'a Elite,
}

pub fn export(args: ExportArgs) -> anyhow::Result<()> {
    let dir = RunDir::new(&args.run);
    let state = dir.load_checkpoint()?;
    let cfg = &state.config;
    let out = args.out.clone().unwrap_or_else(|| args.run.join("export"));
    std::fs::create_dir_all(&out).with_context(|| format!("cannot create {}", out.display()))?;

    let last = state.next_generation;
    let mut at = if args.at.is_empty() { vec![last] } else { args.at.clone() };
    at.sort_unstable();
    at.dedup();
    if let Some(&g) = at.iter().find(|&&g| g > last) {
        bail!("--at {g} is past the last completed generation ({last})");
    }

    let artifacts = args.run.join(ARTIFACT_DIR);
    let thumbnail = |e: &Elite| -> qdart_core::Result<GrayImage> {
        let png = artifacts.join(format!("{:06}.png", e.id));
        if png.exists() {
            GrayImage::load(&png)
        } else {
            Ok(develop(&e.genotype, &cfg.gene_ranges, cfg.canvas)?.raster)
        }
    };
    for &g in &at {
        let grid = EliteGrid::replay(cfg.grid_n, &state.archive, g);
        let snap = out.join(format!("gen{g:04}"));
        std::fs::create_dir_all(&snap).with_context(|| format!("cannot create {}", snap.display()))?;
        write_montage(&grid, &snap, thumbnail)?;
        let cells: Vec<GridEntry> = grid.occupied().map(|(c, elite)| GridEntry { i: c.i, j: c.j, elite }).collect();
        std::fs::write(snap.join("grid.json"), serde_json::to_vec_pretty(&cells)?)?;
        tracing::info!("generation {g}: {} occupied cells -> {}", grid.occupancy(), snap.display());
    }
    std::fs::write(out.join("stats.csv"), stats_csv(&state.stats))?;
    println!("exported {} snapshot(s) to {}", at.len(), out.display());
    Ok(())
}
