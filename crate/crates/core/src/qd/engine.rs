use rand::Rng;
use rayon::prelude::*;

use super::{ArchiveRecord, EvolutionState, RunConfig, StatsRow};
use crate::diversity::{fit_reduction, CellIndex, Descriptor, FeatureVector, ReducedMap, DESCRIPTOR_DIM};
use crate::draw::{develop, Rendering};
use crate::genome::{mutate, random_genotype, Genotype};
use crate::image::GrayImage;
use crate::rng::{derive_seed, seeded};
use crate::{Error, Result};

/// Fitness and feature-space placement of one genotype.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub genotype: Genotype,
    pub fitness: f64,
    pub embedding: [f64; 2],
    pub cell: CellIndex,
    pub raster: GrayImage,
}

#[derive(Clone, Debug, Default)]
pub struct GenerationReport {
    pub generation: usize,
    pub sampled: Option<CellIndex>,
    /// Archive id of the parent when the sampled cell was occupied.
    pub parent_id: Option<u64>,
    /// Indices into the archive of records placed this generation.
    pub placed: Vec<usize>,
    /// Children that failed to render, with the reason.
    pub failures: Vec<(usize, String)>,
    pub stats: Option<StatsRow>,
}

pub struct Engine {
    config: RunConfig,
    map: ReducedMap,
    descriptor: Descriptor,
}

impl Engine {
    /// The map's grid is re-laid with `config.grid_n` cells per axis.
    pub fn new(config: RunConfig, map: ReducedMap) -> Result<Self> {
        config.validate()?;
        if map.d != DESCRIPTOR_DIM {
            return Err(Error::param(
                "map",
                format!(
                    "map has {} feature dimensions; evolution needs a map fitted on the built-in {DESCRIPTOR_DIM}-dim descriptor",
                    map.d
                ),
            ));
        }
        let map = map.with_grid(config.grid_n)?;
        let descriptor = Descriptor { canvas: config.canvas };
        Ok(Engine { config, map, descriptor })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn map(&self) -> &ReducedMap {
        &self.map
    }

    pub fn render(&self, g: &Genotype) -> Result<Rendering> {
        develop(g, &self.config.gene_ranges, self.config.canvas)
    }

    pub fn evaluate(&self, g: &Genotype) -> Result<Evaluation> {
        let Rendering { raster, .. } = self.render(g)?;
        let fitness = self.config.fitness.of_mean(raster.mean());
        let embedding = self.map.embed(&self.descriptor.describe(&raster)?)?;
        Ok(Evaluation { genotype: g.clone(), fitness, embedding, cell: self.map.quantize(embedding), raster })
    }

    /// Runs generation `state.next_generation`: samples a cell, breeds λ
    /// children (random when the cell is empty, mutants of its elite
    /// otherwise), evaluates them in parallel and places them in child order.
    /// `on_placed` sees every placed record with its raster.
    pub fn step_generation(
        &self,
        state: &mut EvolutionState,
        mut on_placed: impl FnMut(&ArchiveRecord, &GrayImage) -> Result<()>,
    ) -> Result<GenerationReport> {
        let gen = state.next_generation;
        if gen >= self.config.generations {
            return Err(Error::param("generation", format!("run already finished {} generations", self.config.generations)));
        }
        let cfg = &self.config;
        let mut rng = seeded(derive_seed(cfg.seed, gen as u64));
        let n = cfg.grid_n;
        let sampled = CellIndex { i: rng.random_range(0..n), j: rng.random_range(0..n) };
        let parent = state.grid.get(sampled).cloned();
        let child_seeds: Vec<u64> = (0..cfg.population).map(|_| rng.random::<u64>()).collect();

        let children: Vec<Result<Genotype>> = child_seeds
            .iter()
            .map(|&s| match &parent {
                None => Ok(random_genotype(s)),
                Some(p) => mutate(&p.genotype, cfg.mutation_rate, cfg.mutation_factor, s),
            })
            .collect();
        let evaluated: Vec<Result<Evaluation>> = children.into_par_iter().map(|c| c.and_then(|g| self.evaluate(&g))).collect();

        let mut report =
            GenerationReport { generation: gen, sampled: Some(sampled), parent_id: parent.as_ref().map(|p| p.id), ..Default::default() };
        for (k, ev) in evaluated.into_iter().enumerate() {
            let ev = match ev {
                Ok(ev) => ev,
                Err(e) => {
                    report.failures.push((k, e.to_string()));
                    continue;
                }
            };
            let id = state.archive.len() as u64;
            let (svg_path, png_path) = ArchiveRecord::artifact_paths(id);
            let record = ArchiveRecord {
                id,
                genotype: ev.genotype,
                fitness: ev.fitness,
                embedding: ev.embedding,
                cell: ev.cell,
                generation: gen,
                parent_id: report.parent_id,
                svg_path,
                png_path,
            };
            if state.grid.try_place(&record) {
                on_placed(&record, &ev.raster)?;
                report.placed.push(state.archive.len());
                state.archive.push(record);
            }
        }
        let row = StatsRow { generation: gen, mean_fitness: state.grid.mean_fitness(), occupancy: state.grid.occupancy_ratio() };
        state.stats.push(row);
        state.next_generation += 1;
        report.stats = Some(row);
        Ok(report)
    }
}

/// Fits a feature map on `samples` random drawings rendered with `config`'s
/// canvas and gene ranges. Genotypes that fail to render are skipped.
pub fn fit_random_map(config: &RunConfig, samples: usize, seed: u64) -> Result<ReducedMap> {
    let descriptor = Descriptor { canvas: config.canvas };
    let features: Vec<FeatureVector> = (0..samples as u64)
        .into_par_iter()
        .filter_map(|k| develop(&random_genotype(derive_seed(seed, k)), &config.gene_ranges, config.canvas).ok())
        .map(|r| descriptor.describe(&r.raster))
        .collect::<Result<_>>()?;
    fit_reduction(&features, config.grid_n)
}
