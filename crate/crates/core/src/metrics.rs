//! Statistical, information-theoretic and morphological image measures used
//! to screen candidate fitness proxies against artist rankings.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::image::GrayImage;
use crate::{Error, Result};

pub const HISTOGRAM_BINS: usize = 256;
pub const BINARY_THRESHOLD: f32 = 0.5;
pub const BOX_SIZES: [usize; 6] = [2, 4, 8, 16, 32, 64];
pub const CSV_HEADER: &str = "id,mean,variance,cx,cy,skew,entropy,energy,euler,fractal_dim";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricVector {
    pub mean: f64,
    pub variance: f64,
    /// Ink-weighted centroid, normalized to `[0, 1]²`.
    pub centroid: [f64; 2],
    pub skew: f64,
    /// Shannon entropy of the intensity histogram, in bits.
    pub entropy: f64,
    pub energy: f64,
    pub euler: i64,
    pub fractal_dim: f64,
}

/// Scalar columns of a [`MetricVector`], in CSV order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Mean,
    Variance,
    Cx,
    Cy,
    Skew,
    Entropy,
    Energy,
    Euler,
    FractalDim,
}

impl Metric {
    pub const ALL: [Metric; 9] = [
        Metric::Mean,
        Metric::Variance,
        Metric::Cx,
        Metric::Cy,
        Metric::Skew,
        Metric::Entropy,
        Metric::Energy,
        Metric::Euler,
        Metric::FractalDim,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Mean => "mean",
            Metric::Variance => "variance",
            Metric::Cx => "cx",
            Metric::Cy => "cy",
            Metric::Skew => "skew",
            Metric::Entropy => "entropy",
            Metric::Energy => "energy",
            Metric::Euler => "euler",
            Metric::FractalDim => "fractal_dim",
        }
    }

    pub fn of(self, m: &MetricVector) -> f64 {
        match self {
            Metric::Mean => m.mean,
            Metric::Variance => m.variance,
            Metric::Cx => m.centroid[0],
            Metric::Cy => m.centroid[1],
            Metric::Skew => m.skew,
            Metric::Entropy => m.entropy,
            Metric::Energy => m.energy,
            Metric::Euler => m.euler as f64,
            Metric::FractalDim => m.fractal_dim,
        }
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Histogram bin of an intensity: `floor(v * 256)`, with 1.0 in the last bin.
/// 8-bit levels `k / 255` land in bin `k`.
pub fn bin_of(v: f32) -> usize {
    ((v.clamp(0.0, 1.0) as f64 * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1)
}

/// Intensity represented by a bin.
pub fn bin_value(bin: usize) -> f64 {
    bin as f64 / (HISTOGRAM_BINS - 1) as f64
}

pub fn histogram(img: &GrayImage) -> [u64; HISTOGRAM_BINS] {
    let mut h = [0u64; HISTOGRAM_BINS];
    for &v in img.pixels() {
        h[bin_of(v)] += 1;
    }
    h
}

/// Fisher skewness, entropy (bits) and energy of a histogram.
fn histogram_stats(h: &[u64; HISTOGRAM_BINS]) -> (f64, f64, f64) {
    let n = h.iter().sum::<u64>() as f64;
    let probs = h.iter().map(|&c| c as f64 / n);
    let mean: f64 = probs.clone().enumerate().map(|(b, p)| p * bin_value(b)).sum();
    let (mut m2, mut m3, mut entropy, mut energy) = (0.0, 0.0, 0.0, 0.0);
    for (b, p) in probs.enumerate() {
        if p == 0.0 {
            continue;
        }
        let d = bin_value(b) - mean;
        m2 += p * d * d;
        m3 += p * d * d * d;
        entropy -= p * p.log2();
        energy += p * p;
    }
    let skew = if m2 > 1e-15 { m3 / m2.powf(1.5) } else { 0.0 };
    (skew, entropy.max(0.0), energy)
}

/// Dark pixels (below the threshold) are foreground.
pub fn binarize(img: &GrayImage) -> Vec<bool> {
    img.pixels().iter().map(|&v| v < BINARY_THRESHOLD).collect()
}

/// Euler number (components − holes) of an 8-connected foreground, by
/// counting 2×2 bit-quad patterns over the zero-padded image.
pub fn euler_number(fg: &[bool], width: usize, height: usize) -> i64 {
    let at = |x: isize, y: isize| -> bool {
        x >= 0 && y >= 0 && (x as usize) < width && (y as usize) < height && fg[y as usize * width + x as usize]
    };
    let (mut q1, mut q3, mut qd) = (0i64, 0i64, 0i64);
    for y in -1..height as isize {
        for x in -1..width as isize {
            let (a, b, c, d) = (at(x, y), at(x + 1, y), at(x, y + 1), at(x + 1, y + 1));
            match a as u8 + b as u8 + c as u8 + d as u8 {
                1 => q1 += 1,
                3 => q3 += 1,
                2 if a == d => qd += 1,
                _ => {}
            }
        }
    }
    (q1 - q3 - 2 * qd) / 4
}

/// Box-counting dimension: least-squares slope of `log N(s)` against
/// `log(1/s)` over [`BOX_SIZES`]. Zero when there is no foreground.
pub fn fractal_dimension(fg: &[bool], width: usize, height: usize) -> f64 {
    let mut pts = Vec::with_capacity(BOX_SIZES.len());
    for &s in &BOX_SIZES {
        let (bw, bh) = (width.div_ceil(s), height.div_ceil(s));
        let mut boxes = vec![false; bw * bh];
        for y in 0..height {
            let row = &fg[y * width..(y + 1) * width];
            for (x, _) in row.iter().enumerate().filter(|(_, &f)| f) {
                boxes[(y / s) * bw + x / s] = true;
            }
        }
        let count = boxes.iter().filter(|&&b| b).count();
        if count > 0 {
            pts.push(((1.0 / s as f64).ln(), (count as f64).ln()));
        }
    }
    if pts.len() < 2 {
        return 0.0;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxy / sxx).clamp(0.0, 2.0)
}

pub fn compute_metrics(img: &GrayImage) -> Result<MetricVector> {
    if img.is_empty() {
        return Err(Error::EmptyImage { width: img.width(), height: img.height() });
    }
    let (w, h) = (img.width() as usize, img.height() as usize);
    let n = (w * h) as f64;
    let px = img.pixels();

    let mean = px.iter().map(|&v| v as f64).sum::<f64>() / n;
    let variance = px.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / n;

    let (mut ink, mut sx, mut sy) = (0.0, 0.0, 0.0);
    for (i, &v) in px.iter().enumerate() {
        let wgt = 1.0 - v as f64;
        if wgt > 0.0 {
            ink += wgt;
            sx += wgt * ((i % w) as f64 + 0.5);
            sy += wgt * ((i / w) as f64 + 0.5);
        }
    }
    let centroid = if ink > 0.0 { [sx / ink / w as f64, sy / ink / h as f64] } else { [0.5, 0.5] };

    let (skew, entropy, energy) = histogram_stats(&histogram(img));
    let fg = binarize(img);
    Ok(MetricVector {
        mean,
        variance,
        centroid,
        skew,
        entropy,
        energy,
        euler: euler_number(&fg, w, h),
        fractal_dim: fractal_dimension(&fg, w, h),
    })
}

#[derive(Debug, Default)]
pub struct MetricTable {
    /// Sorted by id.
    pub rows: Vec<(String, MetricVector)>,
    /// Files that could not be read or decoded, with the reason.
    pub failures: Vec<(PathBuf, String)>,
}

impl MetricTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for (id, m) in &self.rows {
            let _ = writeln!(
                s,
                "{id},{},{},{},{},{},{},{},{},{}",
                m.mean, m.variance, m.centroid[0], m.centroid[1], m.skew, m.entropy, m.energy, m.euler, m.fractal_dim
            );
        }
        s
    }

    pub fn get(&self, id: &str) -> Option<&MetricVector> {
        self.rows.binary_search_by(|(k, _)| k.as_str().cmp(id)).ok().map(|i| &self.rows[i].1)
    }
}

/// Metrics for every `*.png` in `dir`, keyed by file stem. A file that fails
/// to decode is recorded in `failures` and skipped.
pub fn batch_metrics(dir: &Path) -> Result<MetricTable> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")))
        .collect();
    files.sort();
    let results: Vec<(PathBuf, Result<MetricVector>)> = files
        .into_par_iter()
        .map(|p| {
            let r = GrayImage::load(&p).and_then(|img| compute_metrics(&img));
            (p, r)
        })
        .collect();
    let mut table = MetricTable::default();
    for (path, r) in results {
        match r {
            Ok(m) => {
                let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                table.rows.push((id, m));
            }
            Err(e) => table.failures.push((path, e.to_string())),
        }
    }
    table.rows.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binary(w: u32, h: u32, ink: impl Fn(u32, u32) -> bool) -> GrayImage {
        let mut img = GrayImage::filled(w, h, 1.0);
        for y in 0..h {
            for x in 0..w {
                if ink(x, y) {
                    img.set(x, y, 0.0);
                }
            }
        }
        img
    }

    #[test]
    fn white_image_is_degenerate() {
        let m = compute_metrics(&GrayImage::filled(32, 24, 1.0)).unwrap();
        assert_eq!(m.mean, 1.0);
        assert_eq!(m.variance, 0.0);
        assert_eq!(m.skew, 0.0);
        assert_eq!(m.entropy, 0.0);
        assert_eq!(m.energy, 1.0);
        assert_eq!(m.euler, 0);
        assert_eq!(m.fractal_dim, 0.0);
    }

    #[test]
    fn euler_examples() {
        let square = |x: u32, y: u32| (2..5).contains(&x) && (2..5).contains(&y);
        assert_eq!(compute_metrics(&binary(8, 8, square)).unwrap().euler, 1);
        let holed = binary(8, 8, |x, y| square(x, y) && !(x == 3 && y == 3));
        assert_eq!(compute_metrics(&holed).unwrap().euler, 0);
        let two = binary(8, 8, |x, y| (x < 2 && y < 2) || ((5..8).contains(&x) && (5..8).contains(&y)));
        assert_eq!(compute_metrics(&two).unwrap().euler, 2);
        // Diagonal neighbours join under 8-connectivity.
        let diag = binary(4, 4, |x, y| (x, y) == (0, 0) || (x, y) == (1, 1));
        assert_eq!(compute_metrics(&diag).unwrap().euler, 1);
    }

    #[test]
    fn fractal_dimension_of_square_and_line() {
        let square = binary(512, 512, |x, y| (64..448).contains(&x) && (64..448).contains(&y));
        let d = compute_metrics(&square).unwrap().fractal_dim;
        assert!((d - 2.0).abs() <= 0.15, "square {d}");
        let line = binary(512, 512, |_, y| y == 200);
        let d = compute_metrics(&line).unwrap().fractal_dim;
        assert!((d - 1.0).abs() <= 0.15, "line {d}");
    }

    #[test]
    fn inversion_mirrors_mean_and_skew() {
        let levels: Vec<f32> = (0..400).map(|i| ((i * 37) % 97) as f32 / 255.0).collect();
        let img = GrayImage::from_pixels(20, 20, levels.clone());
        let inv = GrayImage::from_pixels(20, 20, levels.iter().map(|&v| (255.0 - (v * 255.0).round()) / 255.0).collect());
        let (a, b) = (compute_metrics(&img).unwrap(), compute_metrics(&inv).unwrap());
        assert!((a.mean + b.mean - 1.0).abs() < 1e-6);
        assert!((a.skew + b.skew).abs() < 1e-9);
        assert!((a.entropy - b.entropy).abs() < 1e-12);
    }

    #[test]
    fn translation_invariance() {
        let shape =
            |ox: u32, oy: u32| move |x: u32, y: u32| x >= ox && x < ox + 6 && y >= oy && y < oy + 4 && !(x == ox + 2 && y == oy + 1);
        let a = compute_metrics(&binary(40, 30, shape(3, 5))).unwrap();
        let b = compute_metrics(&binary(40, 30, shape(20, 17))).unwrap();
        assert_eq!((a.mean, a.skew, a.entropy, a.energy, a.euler), (b.mean, b.skew, b.entropy, b.energy, b.euler));
        assert!((a.variance - b.variance).abs() < 1e-12);
        assert!(b.centroid[0] > a.centroid[0] && b.centroid[1] > a.centroid[1]);
        assert!((b.centroid[0] - a.centroid[0] - 17.0 / 40.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_empty_image() {
        assert!(matches!(compute_metrics(&GrayImage::filled(0, 0, 1.0)), Err(Error::EmptyImage { .. })));
    }

    #[test]
    fn bins_cover_8bit_levels_one_to_one() {
        for k in 0..=255u32 {
            assert_eq!(bin_of(k as f32 / 255.0), k as usize);
        }
    }
}
