//! Genotype → phenotype: agent simulation over a flow field, SVG output and
//! supersampled rasterization.

mod raster;
mod sim;
mod svg;

use serde::{Deserialize, Serialize};

use crate::genome::{decode, GeneRanges, Genotype};
use crate::image::GrayImage;
use crate::Result;

pub use raster::rasterize;
pub use sim::{halton, simulate, Agent};
pub use svg::to_svg;

pub const REFERENCE_WIDTH: u32 = 1024;
pub const REFERENCE_HEIGHT: u32 = 768;

/// Canvas size in pixels (`canvas` in the run config).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Canvas {
    pub width: u32,
    pub height: u32,
}

impl Default for Canvas {
    fn default() -> Self {
        Canvas { width: REFERENCE_WIDTH, height: REFERENCE_HEIGHT }
    }
}

impl Canvas {
    pub const fn new(width: u32, height: u32) -> Self {
        Canvas { width, height }
    }

    /// Factor applied to pixel-valued parameters, which are expressed on
    /// the 1024×768 reference canvas.
    pub fn scale(&self) -> f64 {
        (self.width as f64 / REFERENCE_WIDTH as f64).min(self.height as f64 / REFERENCE_HEIGHT as f64)
    }
}

/// Stroke width of pen `k` on the reference canvas.
pub fn pen_width(pen: u8) -> f64 {
    0.8 + 0.6 * pen as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub pen: u8,
    pub points: Vec<[f64; 2]>,
}

/// Vector output of a simulation: one polyline per agent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Phenotype {
    pub canvas: Canvas,
    pub paths: Vec<Path>,
}

impl Phenotype {
    pub fn empty(canvas: Canvas) -> Self {
        Phenotype { canvas, paths: Vec::new() }
    }

    /// Stroke width of `pen` in canvas pixels.
    pub fn stroke_width(&self, pen: u8) -> f64 {
        pen_width(pen) * self.canvas.scale()
    }

    pub fn total_length(&self) -> f64 {
        self.paths
            .iter()
            .flat_map(|p| p.points.windows(2))
            .map(|w| ((w[1][0] - w[0][0]).powi(2) + (w[1][1] - w[0][1]).powi(2)).sqrt())
            .sum()
    }
}

/// Vector drawing plus its raster.
#[derive(Clone, Debug)]
pub struct Rendering {
    pub phenotype: Phenotype,
    pub raster: GrayImage,
}

/// The full G→P map.
pub fn develop(g: &Genotype, ranges: &GeneRanges, canvas: Canvas) -> Result<Rendering> {
    let phenotype = simulate(&decode(g, ranges), canvas)?;
    let raster = rasterize(&phenotype);
    Ok(Rendering { phenotype, raster })
}
