use std::path::{Component, Path, PathBuf};

use qdart_core::qd::{RunDir, StatsRow, ARTIFACT_DIR, CHECKPOINT_FILE};
use serde::Serialize;

use crate::error::ApiError;

#[derive(Debug, Serialize)]
pub struct GridCell {
    pub i: usize,
    pub j: usize,
    pub id: u64,
    pub fitness: f64,
    pub png_url: String,
}

#[derive(Debug, Serialize)]
pub struct GridView {
    pub run_id: String,
    pub grid_n: usize,
    /// Generations completed so far.
    pub generation: usize,
    pub generations: usize,
    pub cells: Vec<GridCell>,
    pub stats: Vec<StatsRow>,
}

/// True for a bare file or directory name with no path tricks.
pub fn plain_name(name: &str) -> bool {
    let mut parts = Path::new(name).components();
    matches!((parts.next(), parts.next()), (Some(Component::Normal(_)), None)) && !name.contains(['/', '\\'])
}

pub fn run_dir(runs: Option<&Path>, run_id: &str) -> Result<PathBuf, ApiError> {
    let not_found = || ApiError::NotFound(format!("unknown run `{run_id}`"));
    let root = runs.ok_or_else(not_found)?;
    if !plain_name(run_id) {
        return Err(not_found());
    }
    let dir = root.join(run_id);
    if !dir.join(CHECKPOINT_FILE).is_file() {
        return Err(not_found());
    }
    Ok(dir)
}

pub fn list_runs(runs: Option<&Path>) -> Vec<String> {
    let Some(root) = runs else { return Vec::new() };
    let Ok(entries) = std::fs::read_dir(root) else { return Vec::new() };
    let mut ids: Vec<String> = entries
        .filter_map(|e| e.ok())
        .filter(|e| e.path().join(CHECKPOINT_FILE).is_file())
        .filter_map(|e| e.file_name().into_string().ok())
        .collect();
    ids.sort();
    ids
}

pub fn grid_view(dir: &Path, run_id: &str) -> Result<GridView, ApiError> {
    let state = RunDir::new(dir).load_checkpoint().map_err(|e| ApiError::Internal(e.to_string()))?;
    let cells = state
        .grid
        .occupied()
        .map(|(c, e)| GridCell {
            i: c.i,
            j: c.j,
            id: e.id,
            fitness: e.fitness,
            png_url: format!("/api/runs/{run_id}/{ARTIFACT_DIR}/{:06}.png", e.id),
        })
        .collect();
    Ok(GridView {
        run_id: run_id.to_string(),
        grid_n: state.grid.grid_n,
        generation: state.next_generation,
        generations: state.config.generations,
        cells,
        stats: state.stats,
    })
}
