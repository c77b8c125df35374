//! The 17-gene genotype, its decoding into drawing parameters, and the
//! clamped uniform mutation operator.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::rng::seeded;
use crate::{Error, Result};

pub const GENE_COUNT: usize = 17;

/// Seventeen normalized genes, each in `[0, 1]`.
///
/// Serializes as a plain JSON array of 17 numbers. Deserialization
/// validates length and range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Genotype([f64; GENE_COUNT]);

impl Genotype {
    pub fn new(genes: [f64; GENE_COUNT]) -> Result<Self> {
        for (i, g) in genes.iter().enumerate() {
            if !(0.0..=1.0).contains(g) {
                return Err(Error::InvalidGenotype(format!("gene g{} = {g} is outside [0, 1]", i + 1)));
            }
        }
        Ok(Genotype(genes))
    }

    pub fn genes(&self) -> &[f64; GENE_COUNT] {
        &self.0
    }

    /// Gene `g_k` using the 1-based numbering of the gene table.
    pub fn gene(&self, k: usize) -> f64 {
        self.0[k - 1]
    }
}

impl TryFrom<Vec<f64>> for Genotype {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        let genes: [f64; GENE_COUNT] =
            v.try_into().map_err(|v: Vec<f64>| Error::InvalidGenotype(format!("expected {GENE_COUNT} genes, got {}", v.len())))?;
        Genotype::new(genes)
    }
}

impl From<Genotype> for Vec<f64> {
    fn from(g: Genotype) -> Self {
        g.0.to_vec()
    }
}

/// Seventeen independent uniform draws from a seeded generator.
pub fn random_genotype(seed: u64) -> Genotype {
    let mut rng = seeded(seed);
    let mut genes = [0.0; GENE_COUNT];
    for g in &mut genes {
        *g = rng.random::<f64>();
    }
    Genotype(genes)
}

/// Mutates each gene with probability `rate` by a uniform delta in
/// `[-factor, factor]`, clamping the result to `[0, 1]`.
pub fn mutate(parent: &Genotype, rate: f64, factor: f64, seed: u64) -> Result<Genotype> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::param("mutation_rate", format!("{rate} is outside [0, 1]")));
    }
    if !(0.0..=1.0).contains(&factor) {
        return Err(Error::param("mutation_factor", format!("{factor} is outside [0, 1]")));
    }
    let mut rng = seeded(seed);
    let mut genes = parent.0;
    for g in &mut genes {
        // Both draws are taken for every gene so the stream position never
        // depends on earlier outcomes.
        let hit = rng.random::<f64>() < rate;
        let delta = (2.0 * rng.random::<f64>() - 1.0) * factor;
        if hit {
            *g = (*g + delta).clamp(0.0, 1.0);
        }
    }
    Ok(Genotype(genes))
}

/// Closed interval a normalized gene is mapped onto.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct GeneRange {
    pub min: f64,
    pub max: f64,
}

impl GeneRange {
    pub const fn new(min: f64, max: f64) -> Self {
        GeneRange { min, max }
    }

    pub fn map(&self, g: f64) -> f64 {
        self.min + g * (self.max - self.min)
    }

    fn map_rounded(&self, g: f64) -> u32 {
        self.map(g).round().max(0.0) as u32
    }
}

impl From<[f64; 2]> for GeneRange {
    fn from([min, max]: [f64; 2]) -> Self {
        GeneRange { min, max }
    }
}

impl From<GeneRange> for [f64; 2] {
    fn from(r: GeneRange) -> Self {
        [r.min, r.max]
    }
}

/// Gene → parameter mapping table (`gene_ranges` in the run config).
///
/// Pixel-valued ranges refer to the 1024×768 reference canvas; the draw
/// engine rescales them for other canvas sizes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneRanges {
    pub border_width: GeneRange,
    pub agent_speed: GeneRange,
    pub agent_count: GeneRange,
    pub noise_strength: GeneRange,
    pub noise_displacement: GeneRange,
    pub noise_freq_x: GeneRange,
    pub noise_freq_y: GeneRange,
    pub noise_z_scale: GeneRange,
    pub z_position: GeneRange,
    pub noise_octaves: GeneRange,
    pub noise_falloff: GeneRange,
    pub pen_count: GeneRange,
    pub pen_ratio: GeneRange,
    pub style_linear: GeneRange,
    pub style_circular: GeneRange,
    pub style_spiral: GeneRange,
    /// Not gene-controlled.
    pub agent_lifetime: u32,
}

impl Default for GeneRanges {
    fn default() -> Self {
        GeneRanges {
            border_width: GeneRange::new(0.0, 400.0),
            agent_speed: GeneRange::new(0.5, 8.0),
            agent_count: GeneRange::new(8.0, 512.0),
            noise_strength: GeneRange::new(0.0, 4.0),
            noise_displacement: GeneRange::new(0.0, 200.0),
            noise_freq_x: GeneRange::new(0.001, 0.02),
            noise_freq_y: GeneRange::new(0.001, 0.02),
            noise_z_scale: GeneRange::new(0.0, 2.0),
            z_position: GeneRange::new(0.0, 10.0),
            noise_octaves: GeneRange::new(1.0, 6.0),
            noise_falloff: GeneRange::new(0.3, 0.8),
            pen_count: GeneRange::new(1.0, 4.0),
            pen_ratio: GeneRange::new(0.0, 1.0),
            style_linear: GeneRange::new(0.0, 1.0),
            style_circular: GeneRange::new(0.0, 1.0),
            style_spiral: GeneRange::new(0.0, 1.0),
            agent_lifetime: 2000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseAlgorithm {
    Value,
    Perlin,
    FbmPerlin,
    CurlPerlin,
    Ridged,
}

impl NoiseAlgorithm {
    pub const ALL: [NoiseAlgorithm; 5] =
        [NoiseAlgorithm::Value, NoiseAlgorithm::Perlin, NoiseAlgorithm::FbmPerlin, NoiseAlgorithm::CurlPerlin, NoiseAlgorithm::Ridged];

    /// `floor(g * 5)`, with `g = 1` folded into the last slot.
    pub fn from_gene(g: f64) -> Self {
        let idx = ((g * 5.0).floor() as usize).min(4);
        Self::ALL[idx]
    }

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|&a| a == self).unwrap()
    }
}

/// Simulation parameters decoded from a genotype.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DrawingParams {
    pub border_width: f64,
    pub agent_speed: f64,
    pub agent_count: u32,
    pub agent_lifetime: u32,
    pub noise_strength: f64,
    pub noise_displacement: f64,
    pub noise_freq_x: f64,
    pub noise_freq_y: f64,
    pub noise_z_scale: f64,
    pub z_position: f64,
    pub noise_octaves: u32,
    pub noise_falloff: f64,
    pub pen_count: u32,
    pub pen_ratio: f64,
    pub style_linear: f64,
    pub style_circular: f64,
    pub style_spiral: f64,
    pub noise_algorithm: NoiseAlgorithm,
}

/// Affine per-gene mapping onto `ranges`; discrete genes are rounded here,
/// never during mutation.
pub fn decode(g: &Genotype, ranges: &GeneRanges) -> DrawingParams {
    DrawingParams {
        border_width: ranges.border_width.map(g.gene(1)),
        agent_speed: ranges.agent_speed.map(g.gene(2)),
        agent_count: ranges.agent_count.map_rounded(g.gene(3)),
        agent_lifetime: ranges.agent_lifetime,
        noise_strength: ranges.noise_strength.map(g.gene(4)),
        noise_displacement: ranges.noise_displacement.map(g.gene(5)),
        noise_freq_x: ranges.noise_freq_x.map(g.gene(6)),
        noise_freq_y: ranges.noise_freq_y.map(g.gene(7)),
        noise_z_scale: ranges.noise_z_scale.map(g.gene(8)),
        z_position: ranges.z_position.map(g.gene(9)),
        noise_octaves: ranges.noise_octaves.map_rounded(g.gene(10)),
        noise_falloff: ranges.noise_falloff.map(g.gene(11)),
        pen_count: ranges.pen_count.map_rounded(g.gene(12)),
        pen_ratio: ranges.pen_ratio.map(g.gene(13)),
        style_linear: ranges.style_linear.map(g.gene(14)),
        style_circular: ranges.style_circular.map(g.gene(15)),
        style_spiral: ranges.style_spiral.map(g.gene(16)),
        noise_algorithm: NoiseAlgorithm::from_gene(g.gene(17)),
    }
}
