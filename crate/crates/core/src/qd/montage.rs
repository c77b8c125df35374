use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Elite, EliteGrid};
use crate::diversity::CellIndex;
use crate::image::GrayImage;
use crate::{Error, Result};

pub const TILE_WIDTH: u32 = 128;
pub const TILE_HEIGHT: u32 = 96;
const FAILED_TILE: f32 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MontageCell {
    pub cell: CellIndex,
    pub id: u64,
    pub fitness: f64,
}

/// Tiles occupant thumbnails into a `grid_n × grid_n` sheet, cell `(i, j)`
/// at column `i`, row `j`. Empty cells stay white; occupied tiles get a
/// black frame so even an empty drawing is visible. A thumbnail that fails
/// to render is shown as a gray tile.
pub fn export_grid_montage(grid: &EliteGrid, thumbnail: impl Fn(&Elite) -> Result<GrayImage>) -> (GrayImage, Vec<MontageCell>) {
    let n = grid.grid_n as u32;
    let mut sheet = GrayImage::filled(n * TILE_WIDTH, n * TILE_HEIGHT, 1.0);
    let mut cells = Vec::new();
    for (cell, elite) in grid.occupied() {
        let tile = match thumbnail(elite) {
            Ok(img) => img.downsample(TILE_WIDTH, TILE_HEIGHT),
            Err(_) => GrayImage::filled(TILE_WIDTH, TILE_HEIGHT, FAILED_TILE),
        };
        let (x0, y0) = (cell.i as u32 * TILE_WIDTH, cell.j as u32 * TILE_HEIGHT);
        for y in 0..TILE_HEIGHT {
            for x in 0..TILE_WIDTH {
                let edge = x == 0 || y == 0 || x == TILE_WIDTH - 1 || y == TILE_HEIGHT - 1;
                sheet.set(x0 + x, y0 + y, if edge { 0.0 } else { tile.get(x, y) });
            }
        }
        cells.push(MontageCell { cell, id: elite.id, fitness: elite.fitness });
    }
    (sheet, cells)
}

/// Writes `montage.png` and `montage.json` into `dir`.
pub fn write_montage(grid: &EliteGrid, dir: &Path, thumbnail: impl Fn(&Elite) -> Result<GrayImage>) -> Result<()> {
    let (sheet, cells) = export_grid_montage(grid, thumbnail);
    sheet.save(&dir.join("montage.png"))?;
    let path = dir.join("montage.json");
    std::fs::write(&path, serde_json::to_vec_pretty(&cells).expect("cells serialize")).map_err(|e| Error::io(&path, e))
}
