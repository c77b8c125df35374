use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{stats_csv, write_montage, ArchiveRecord, Engine, EvolutionState, GenerationReport};
use crate::draw::to_svg;
use crate::image::GrayImage;
use crate::{Error, Result};

pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const ARCHIVE_FILE: &str = "archive.jsonl";
pub const STATS_FILE: &str = "stats.csv";
pub const ARTIFACT_DIR: &str = "artifacts";
const CONFIG_FILE: &str = "config.json";
const CHECKPOINT_VERSION: u32 = 1;

/// SHA-256 of the archive as written to `archive.jsonl`.
pub fn archive_checksum(records: &[ArchiveRecord]) -> String {
    let mut h = Sha256::new();
    for r in records {
        h.update(archive_line(r).as_bytes());
    }
    hex::encode(h.finalize())
}

fn archive_line(r: &ArchiveRecord) -> String {
    let mut s = serde_json::to_string(r).expect("record serializes");
    s.push('\n');
    s
}

/// Output layout of one run.
#[derive(Clone, Debug)]
pub struct RunDir {
    pub root: PathBuf,
}

impl RunDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        RunDir { root: root.into() }
    }

    pub fn checkpoint(&self) -> PathBuf {
        self.root.join(CHECKPOINT_FILE)
    }

    pub fn archive(&self) -> PathBuf {
        self.root.join(ARCHIVE_FILE)
    }

    pub fn stats(&self) -> PathBuf {
        self.root.join(STATS_FILE)
    }

    pub fn artifacts(&self) -> PathBuf {
        self.root.join(ARTIFACT_DIR)
    }

    pub fn load_checkpoint(&self) -> Result<EvolutionState> {
        load_checkpoint(&self.checkpoint())
    }
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    version: u32,
    sha256: String,
    state: serde_json::Value,
}

/// Hash of the canonical (sorted-key) JSON form of the state.
fn state_digest(state: &serde_json::Value) -> String {
    hex::encode(Sha256::digest(serde_json::to_string(state).expect("value serializes").as_bytes()))
}

fn save_checkpoint(path: &Path, state: &EvolutionState) -> Result<()> {
    let value = serde_json::to_value(state).expect("state serializes");
    let doc = Checkpoint { version: CHECKPOINT_VERSION, sha256: state_digest(&value), state: value };
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, serde_json::to_vec(&doc).expect("checkpoint serializes")).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<EvolutionState> {
    let corrupt = |reason: String| Error::CorruptCheckpoint { path: path.to_path_buf(), reason };
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let doc: Checkpoint = serde_json::from_slice(&bytes).map_err(|e| corrupt(e.to_string()))?;
    if doc.version != CHECKPOINT_VERSION {
        return Err(corrupt(format!("unsupported version {}", doc.version)));
    }
    let digest = state_digest(&doc.state);
    if digest != doc.sha256 {
        return Err(corrupt(format!("checksum mismatch: stored {}, computed {digest}", doc.sha256)));
    }
    let state: EvolutionState = serde_json::from_value(doc.state).map_err(|e| corrupt(e.to_string()))?;
    if state.grid.grid_n != state.config.grid_n || state.stats.len() != state.next_generation {
        return Err(corrupt("state is internally inconsistent".into()));
    }
    Ok(state)
}

/// A run in progress, optionally persisted to a directory after every
/// generation.
pub struct Run<'e> {
    engine: &'e Engine,
    state: EvolutionState,
    dir: Option<RunDir>,
    artifacts: bool,
}

impl<'e> Run<'e> {
    /// An in-memory run with no artifacts.
    pub fn in_memory(engine: &'e Engine) -> Self {
        Run { engine, state: EvolutionState::new(engine.config().clone()), dir: None, artifacts: false }
    }

    /// Starts a fresh run in `root`, which must not already hold one.
    pub fn create(engine: &'e Engine, root: &Path) -> Result<Self> {
        let dir = RunDir::new(root);
        if dir.checkpoint().exists() {
            return Err(Error::param("out", format!("{} already contains a run; resume it or choose another directory", root.display())));
        }
        fs::create_dir_all(dir.artifacts()).map_err(|e| Error::io(dir.artifacts(), e))?;
        let cfg = serde_json::to_vec_pretty(engine.config()).expect("config serializes");
        let cfg_path = root.join(CONFIG_FILE);
        fs::write(&cfg_path, cfg).map_err(|e| Error::io(&cfg_path, e))?;
        let run = Run { engine, state: EvolutionState::new(engine.config().clone()), dir: Some(dir), artifacts: true };
        run.rewrite_logs()?;
        Ok(run)
    }

    /// Continues the run in `root` from its last checkpoint. The generation
    /// budget may differ from the original; every other setting must match.
    pub fn resume(engine: &'e Engine, root: &Path) -> Result<Self> {
        let dir = RunDir::new(root);
        let mut state = dir.load_checkpoint()?;
        if !state.config.same_run(engine.config()) {
            return Err(Error::param("config", "does not match the checkpointed run"));
        }
        state.config.generations = engine.config().generations;
        let run = Run { engine, state, dir: Some(dir), artifacts: true };
        // Drops any lines written after the last checkpoint.
        run.rewrite_logs()?;
        Ok(run)
    }

    /// Skips writing per-elite PNG and SVG files; logs and checkpoints are
    /// still written.
    pub fn without_artifacts(mut self) -> Self {
        self.artifacts = false;
        self
    }

    pub fn dir(&self) -> Option<&RunDir> {
        self.dir.as_ref()
    }

    pub fn state(&self) -> &EvolutionState {
        &self.state
    }

    pub fn into_state(self) -> EvolutionState {
        self.state
    }

    pub fn is_finished(&self) -> bool {
        self.state.is_finished()
    }

    pub fn step(&mut self) -> Result<GenerationReport> {
        let engine = self.engine;
        let report = match self.dir.as_ref().filter(|_| self.artifacts) {
            None => engine.step_generation(&mut self.state, |_, _| Ok(()))?,
            Some(dir) => {
                let dir = dir.clone();
                engine.step_generation(&mut self.state, |rec, raster| write_artifacts(engine, &dir, rec, raster))?
            }
        };
        if let Some(dir) = &self.dir {
            let mut archive = append(&dir.archive())?;
            for &k in &report.placed {
                archive.write_all(archive_line(&self.state.archive[k]).as_bytes()).map_err(|e| Error::io(dir.archive(), e))?;
            }
            archive.flush().map_err(|e| Error::io(dir.archive(), e))?;
            let row = report.stats.expect("step reports stats");
            let mut stats = append(&dir.stats())?;
            writeln!(stats, "{},{},{}", row.generation, row.mean_fitness, row.occupancy).map_err(|e| Error::io(dir.stats(), e))?;
            save_checkpoint(&dir.checkpoint(), &self.state)?;
        }
        Ok(report)
    }

    /// Steps until the generation budget is spent, calling `progress` after
    /// each generation.
    pub fn run_to_end(&mut self, mut progress: impl FnMut(&GenerationReport)) -> Result<()> {
        while !self.is_finished() {
            let report = self.step()?;
            progress(&report);
        }
        Ok(())
    }

    /// Writes the montage of the current grid into the run directory.
    pub fn export_montage(&self) -> Result<()> {
        if let Some(dir) = &self.dir {
            write_montage(&self.state.grid, &dir.root, |e| Ok(self.engine.render(&e.genotype)?.raster))?;
        }
        Ok(())
    }

    fn rewrite_logs(&self) -> Result<()> {
        let Some(dir) = &self.dir else { return Ok(()) };
        let mut archive = String::new();
        for r in &self.state.archive {
            archive.push_str(&archive_line(r));
        }
        fs::write(dir.archive(), archive).map_err(|e| Error::io(dir.archive(), e))?;
        fs::write(dir.stats(), stats_csv(&self.state.stats)).map_err(|e| Error::io(dir.stats(), e))
    }
}

fn append(path: &Path) -> Result<BufWriter<File>> {
    OpenOptions::new().append(true).create(true).open(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn write_artifacts(engine: &Engine, dir: &RunDir, rec: &ArchiveRecord, raster: &GrayImage) -> Result<()> {
    raster.save(&dir.root.join(&rec.png_path))?;
    let svg = to_svg(&engine.render(&rec.genotype)?.phenotype);
    let path = dir.root.join(&rec.svg_path);
    fs::write(&path, svg).map_err(|e| Error::io(&path, e))
}
