//! Visual-feature diversity axis: image descriptor → 2-D linear embedding →
//! grid cell.

mod describe;
mod pca;

use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use describe::{describe, Descriptor, DESCRIPTOR_DIM, DOWNSAMPLE_SIDE, ORIENTATION_BINS, ORIENTATION_GRID};
pub use pca::{fit_reduction, BOUNDS_MARGIN};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn distance(&self, other: &FeatureVector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellIndex {
    pub i: usize,
    pub j: usize,
}

/// A fitted linear projection to 2-D plus the grid laid over it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReducedMap {
    pub d: usize,
    pub mean: Vec<f64>,
    /// Two orthonormal rows of length `d`.
    pub basis: [Vec<f64>; 2],
    /// `[min, max]` per output axis.
    pub bounds: [[f64; 2]; 2],
    pub grid_n: usize,
}

impl ReducedMap {
    pub fn embed(&self, v: &FeatureVector) -> Result<[f64; 2]> {
        if v.dim() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: v.dim() });
        }
        let mut out = [0.0; 2];
        for (o, row) in out.iter_mut().zip(&self.basis) {
            *o = v.0.iter().zip(&self.mean).zip(row).map(|((x, m), b)| (x - m) * b).sum();
        }
        Ok(out)
    }

    /// Linear binning over `bounds`; points outside clamp to the edge cells.
    pub fn quantize(&self, point: [f64; 2]) -> CellIndex {
        let bin = |axis: usize| {
            let [lo, hi] = self.bounds[axis];
            let t = (point[axis] - lo) / (hi - lo) * self.grid_n as f64;
            // NaN saturates to 0.
            (t.floor().max(0.0) as usize).min(self.grid_n - 1)
        };
        CellIndex { i: bin(0), j: bin(1) }
    }

    pub fn with_grid(mut self, grid_n: usize) -> Result<Self> {
        if grid_n < 2 {
            return Err(Error::param("grid_n", format!("{grid_n} < 2")));
        }
        self.grid_n = grid_n;
        Ok(self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let map: ReducedMap = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        map.check()?;
        Ok(map)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("map serializes");
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    fn check(&self) -> Result<()> {
        if self.mean.len() != self.d || self.basis.iter().any(|r| r.len() != self.d) {
            return Err(Error::DimensionMismatch { expected: self.d, got: self.mean.len() });
        }
        if self.bounds.iter().any(|[lo, hi]| lo.partial_cmp(hi) != Some(std::cmp::Ordering::Less)) {
            return Err(Error::param("bounds", "each axis needs min < max"));
        }
        if self.grid_n < 2 {
            return Err(Error::param("grid_n", format!("{} < 2", self.grid_n)));
        }
        Ok(())
    }
}

#[derive(Deserialize)]
struct FeatureLine {
    id: String,
    values: Vec<f64>,
}

/// Reads line-delimited `{id, values:[...]}` records. All vectors must share
/// one dimension and be finite.
pub fn read_features(path: &Path) -> Result<Vec<(String, FeatureVector)>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out: Vec<(String, FeatureVector)> = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: FeatureLine = serde_json::from_str(&line).map_err(|e| Error::json(path, e))?;
        if let Some((_, first)) = out.first() {
            if first.dim() != rec.values.len() {
                return Err(Error::DimensionMismatch { expected: first.dim(), got: rec.values.len() });
            }
        }
        if rec.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("features", format!("non-finite value in `{}`", rec.id)));
        }
        out.push((rec.id, FeatureVector(rec.values)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_map(grid_n: usize) -> ReducedMap {
        ReducedMap { d: 2, mean: vec![0.0, 0.0], basis: [vec![1.0, 0.0], vec![0.0, 1.0]], bounds: [[-1.0, 1.0], [0.0, 4.0]], grid_n }
    }

    #[test]
    fn quantize_examples() {
        let m = unit_map(8);
        assert_eq!(m.quantize([-1.0, 0.0]), CellIndex { i: 0, j: 0 });
        assert_eq!(m.quantize([1.0, 4.0]), CellIndex { i: 7, j: 7 });
        assert_eq!(m.quantize([0.0, 2.0]), CellIndex { i: 4, j: 4 });
        assert_eq!(m.quantize([-50.0, 1e9]), CellIndex { i: 0, j: 7 });
        assert_eq!(m.quantize([f64::NAN, 2.0]).i, 0);
    }

    #[test]
    fn embed_checks_dimension() {
        let m = unit_map(8);
        assert_eq!(m.embed(&FeatureVector(vec![0.0, 0.0])).unwrap(), [0.0, 0.0]);
        assert!(matches!(m.embed(&FeatureVector(vec![1.0])), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn map_json_round_trip_and_validation() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("map.json");
        unit_map(10).save(&p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        for key in ["\"d\"", "\"mean\"", "\"basis\"", "\"bounds\"", "\"grid_n\""] {
            assert!(text.contains(key));
        }
        assert_eq!(ReducedMap::load(&p).unwrap(), unit_map(10));
        let mut bad = unit_map(10);
        bad.bounds[0] = [1.0, 1.0];
        bad.save(&p).unwrap();
        assert!(ReducedMap::load(&p).is_err());
    }

    #[test]
    fn feature_import() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.jsonl");
        std::fs::write(&p, "{\"id\":\"a\",\"values\":[1,2,3]}\n\n{\"id\":\"b\",\"values\":[4,5,6]}\n").unwrap();
        let f = read_features(&p).unwrap();
        assert_eq!(f.len(), 2);
        assert_eq!(f[1].1, FeatureVector(vec![4.0, 5.0, 6.0]));
        std::fs::write(&p, "{\"id\":\"a\",\"values\":[1,2,3]}\n{\"id\":\"b\",\"values\":[4,5]}\n").unwrap();
        assert!(matches!(read_features(&p), Err(Error::DimensionMismatch { .. })));
    }

    proptest! {
        #[test]
        fn quantize_is_monotone_and_total(x1 in -3.0..3.0f64, x2 in -3.0..3.0f64, y in -1.0..5.0f64) {
            let m = unit_map(8);
            let (a, b) = (m.quantize([x1.min(x2), y]), m.quantize([x1.max(x2), y]));
            prop_assert!(a.i <= b.i);
            prop_assert!(a.i < 8 && a.j < 8 && b.i < 8 && b.j < 8);
        }
    }
}
