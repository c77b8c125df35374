//! MAP-Elites over the visual-feature grid.

mod engine;
mod montage;
mod run;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diversity::CellIndex;
use crate::draw::Canvas;
use crate::fitness::FitnessConfig;
use crate::genome::{GeneRanges, Genotype};
use crate::{Error, Result};

pub use engine::{fit_random_map, Engine, Evaluation, GenerationReport};
pub use montage::{export_grid_montage, write_montage, MontageCell, TILE_HEIGHT, TILE_WIDTH};
pub use run::{archive_checksum, Run, RunDir, ARCHIVE_FILE, ARTIFACT_DIR, CHECKPOINT_FILE, STATS_FILE};

/// Evolution run configuration; also the on-disk config file format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub grid_n: usize,
    pub generations: usize,
    /// Children per generation (λ).
    pub population: usize,
    pub mutation_rate: f64,
    pub mutation_factor: f64,
    pub seed: u64,
    pub fitness: FitnessConfig,
    pub canvas: Canvas,
    pub gene_ranges: GeneRanges,
    /// Fitted feature map; relative paths resolve against the config file.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub map: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            grid_n: 8,
            generations: 100,
            population: 25,
            mutation_rate: 0.25,
            mutation_factor: 0.15,
            seed: 0,
            fitness: FitnessConfig::default(),
            canvas: Canvas::default(),
            gene_ranges: GeneRanges::default(),
            map: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_n < 2 {
            return Err(Error::param("grid_n", format!("{} < 2", self.grid_n)));
        }
        if self.generations < 1 {
            return Err(Error::param("generations", "must be at least 1"));
        }
        if self.population < 1 {
            return Err(Error::param("population", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return Err(Error::param("mutation_rate", format!("{} is outside [0, 1]", self.mutation_rate)));
        }
        if !(0.0..=1.0).contains(&self.mutation_factor) {
            return Err(Error::param("mutation_factor", format!("{} is outside [0, 1]", self.mutation_factor)));
        }
        if self.canvas.width == 0 || self.canvas.height == 0 {
            return Err(Error::param("canvas", "width and height must be positive"));
        }
        self.fitness.validate()
    }

    /// Loads a config file, resolving a relative `map` path against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: RunConfig = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        if let (Some(map), Some(dir)) = (&cfg.map, path.parent()) {
            if map.is_relative() {
                cfg.map = Some(dir.join(map));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// True when `other` describes the same run, possibly with a different
    /// generation budget.
    pub fn same_run(&self, other: &RunConfig) -> bool {
        RunConfig { generations: 0, map: None, ..self.clone() } == RunConfig { generations: 0, map: None, ..other.clone() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Elite {
    pub id: u64,
    pub fitness: f64,
    pub genotype: Genotype,
}

/// `grid_n × grid_n` cells, each holding at most one elite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EliteGrid {
    pub grid_n: usize,
    /// Row-major by `j`, then `i`.
    cells: Vec<Option<Elite>>,
}

impl EliteGrid {
    pub fn new(grid_n: usize) -> Self {
        EliteGrid { grid_n, cells: vec![None; grid_n * grid_n] }
    }

    fn slot(&self, c: CellIndex) -> usize {
        assert!(c.i < self.grid_n && c.j < self.grid_n, "cell {c:?} outside {0}x{0} grid", self.grid_n);
        c.j * self.grid_n + c.i
    }

    pub fn get(&self, c: CellIndex) -> Option<&Elite> {
        self.cells[self.slot(c)].as_ref()
    }

    pub fn occupied(&self) -> impl Iterator<Item = (CellIndex, &Elite)> {
        let n = self.grid_n;
        self.cells.iter().enumerate().filter_map(move |(k, e)| e.as_ref().map(|e| (CellIndex { i: k % n, j: k / n }, e)))
    }

    pub fn occupancy(&self) -> usize {
        self.cells.iter().filter(|c| c.is_some()).count()
    }

    pub fn occupancy_ratio(&self) -> f64 {
        self.occupancy() as f64 / self.cells.len() as f64
    }

    /// Mean fitness over occupied cells; 0 for an empty grid.
    pub fn mean_fitness(&self) -> f64 {
        let n = self.occupancy();
        if n == 0 {
            0.0
        } else {
            self.occupied().map(|(_, e)| e.fitness).sum::<f64>() / n as f64
        }
    }

    /// The grid as it stood after `generations` generations, rebuilt by
    /// replaying the archive in order.
    pub fn replay(grid_n: usize, archive: &[ArchiveRecord], generations: usize) -> Self {
        let mut grid = EliteGrid::new(grid_n);
        for r in archive.iter().take_while(|r| r.generation < generations) {
            grid.try_place(r);
        }
        grid
    }

    /// Places the candidate if its cell is empty or it is strictly fitter
    /// than the occupant. Ties keep the incumbent.
    pub fn try_place(&mut self, candidate: &ArchiveRecord) -> bool {
        let k = self.slot(candidate.cell);
        let better = match &self.cells[k] {
            None => true,
            Some(e) => candidate.fitness > e.fitness,
        };
        if better {
            self.cells[k] = Some(Elite { id: candidate.id, fitness: candidate.fitness, genotype: candidate.genotype.clone() });
        }
        better
    }
}

/// An elite as placed, one line of `archive.jsonl`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArchiveRecord {
    pub id: u64,
    pub genotype: Genotype,
    pub fitness: f64,
    pub embedding: [f64; 2],
    pub cell: CellIndex,
    pub generation: usize,
    pub parent_id: Option<u64>,
    pub svg_path: String,
    pub png_path: String,
}

impl ArchiveRecord {
    pub fn artifact_paths(id: u64) -> (String, String) {
        (format!("{ARTIFACT_DIR}/{id:06}.svg"), format!("{ARTIFACT_DIR}/{id:06}.png"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatsRow {
    pub generation: usize,
    pub mean_fitness: f64,
    pub occupancy: f64,
}

/// Everything needed to continue a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolutionState {
    pub config: RunConfig,
    pub grid: EliteGrid,
    pub archive: Vec<ArchiveRecord>,
    pub stats: Vec<StatsRow>,
    pub next_generation: usize,
}

impl EvolutionState {
    pub fn new(config: RunConfig) -> Self {
        EvolutionState { grid: EliteGrid::new(config.grid_n), config, archive: Vec::new(), stats: Vec::new(), next_generation: 0 }
    }

    pub fn is_finished(&self) -> bool {
        self.next_generation >= self.config.generations
    }
}

pub fn stats_csv(rows: &[StatsRow]) -> String {
    let mut s = String::from("generation,mean_fitness,occupancy\n");
    for r in rows {
        s.push_str(&format!("{},{},{}\n", r.generation, r.mean_fitness, r.occupancy));
    }
    s
}
