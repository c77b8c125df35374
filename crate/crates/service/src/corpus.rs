use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};

/// Files backing one corpus image.
#[derive(Clone, Debug, PartialEq)]
pub struct Asset {
    pub png: PathBuf,
    pub svg: Option<PathBuf>,
}

/// Images in a corpus directory, keyed by file stem. Every `*.png` is an
/// image; a sibling `*.svg` with the same stem is its vector form.
#[derive(Clone, Debug, Default)]
pub struct Corpus {
    pub images: BTreeMap<String, Asset>,
}

impl Corpus {
    pub fn load(dir: &Path) -> anyhow::Result<Self> {
        let entries = std::fs::read_dir(dir).with_context(|| format!("cannot read corpus directory {}", dir.display()))?;
        let mut images = BTreeMap::new();
        for entry in entries {
            let path = entry.with_context(|| format!("cannot list {}", dir.display()))?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("png") {
                continue;
            }
            let Some(id) = path.file_stem().and_then(|s| s.to_str()) else { continue };
            let svg = path.with_extension("svg");
            images.insert(id.to_string(), Asset { svg: svg.is_file().then_some(svg), png: path.clone() });
        }
        if images.len() < 2 {
            bail!("corpus {} has {} PNG image(s); ranking needs at least 2", dir.display(), images.len());
        }
        Ok(Corpus { images })
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.images.keys().map(String::as_str)
    }
}
