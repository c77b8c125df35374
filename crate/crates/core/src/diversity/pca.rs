//! Top-2 principal directions by block subspace iteration with
//! Rayleigh–Ritz refinement. Only products with the centered data matrix
//! are formed, so the cost is linear in the feature dimension.

use rand::Rng;

use super::{FeatureVector, ReducedMap};
use crate::rng::seeded;
use crate::{Error, Result};

/// Fractional padding added on both sides of each axis' sample range.
pub const BOUNDS_MARGIN: f64 = 0.05;

const BLOCK: usize = 8;
const MAX_ITERS: usize = 20_000;
const TOL: f64 = 1e-13;
const INIT_SEED: u64 = 0x9ca_5eed;

/// D×k block stored as columns.
struct Block {
    cols: Vec<Vec<f64>>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(y, x)| *y += alpha * x);
}

/// Modified Gram–Schmidt (two passes). A column that collapses is replaced by
/// a fresh pseudo-random direction so the block keeps full rank.
fn orthonormalize(block: &mut Block, rng: &mut crate::rng::Rng) {
    for i in 0..block.cols.len() {
        for attempt in 0.. {
            let (done, rest) = block.cols.split_at_mut(i);
            let col = &mut rest[0];
            let before = dot(col, col).sqrt();
            for _ in 0..2 {
                for q in done.iter() {
                    let c = dot(q, col);
                    axpy(-c, q, col);
                }
            }
            let norm = dot(col, col).sqrt();
            if norm > 1e-10 * before.max(f64::MIN_POSITIVE) && norm > 0.0 {
                col.iter_mut().for_each(|x| *x /= norm);
                break;
            }
            assert!(attempt < 100, "cannot complete orthonormal block");
            col.iter_mut().for_each(|x| *x = rng.random::<f64>() - 0.5);
        }
    }
}

/// Cyclic Jacobi eigendecomposition of a small symmetric matrix; returns
/// eigenvalues descending with matching eigenvector columns.
fn symmetric_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        let total: f64 = a.iter().flatten().map(|x| x * x).sum();
        if off <= 1e-30 * total.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in a.iter_mut() {
                    let (akp, akq) = (row[p], row[q]);
                    row[p] = c * akp - s * akq;
                    row[q] = s * akp + c * akq;
                }
                let (rp, rq) = (a[p].clone(), a[q].clone());
                for k in 0..n {
                    a[p][k] = c * rp[k] - s * rq[k];
                    a[q][k] = s * rp[k] + c * rq[k];
                }
                for row in v.iter_mut() {
                    let (vkp, vkq) = (row[p], row[q]);
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[y][y].total_cmp(&a[x][x]));
    let values = order.iter().map(|&i| a[i][i]).collect();
    let vectors = order.iter().map(|&i| v.iter().map(|row| row[i]).collect()).collect();
    (values, vectors)
}

/// Centered sample matrix, row-major.
struct Centered {
    rows: Vec<Vec<f64>>,
}

impl Centered {
    /// Covariance (up to a constant factor) times `x`: `Xᵀ (X x)`.
    fn cov_mul(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for r in &self.rows {
            let s = dot(r, x);
            axpy(s, r, out);
        }
    }
}

/// Fits a mean-centered PCA projection onto the two leading directions.
///
/// Each basis row is signed so its largest-magnitude coefficient is
/// positive. Bounds are the sample projection range padded by
/// [`BOUNDS_MARGIN`] on each side.
pub fn fit_reduction(samples: &[FeatureVector], grid_n: usize) -> Result<ReducedMap> {
    if samples.len() < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: samples.len() });
    }
    if grid_n < 2 {
        return Err(Error::param("grid_n", format!("{grid_n} < 2")));
    }
    let d = samples[0].dim();
    if let Some(bad) = samples.iter().find(|s| s.dim() != d) {
        return Err(Error::DimensionMismatch { expected: d, got: bad.dim() });
    }
    if d < 2 {
        return Err(Error::param("features", "need at least 2 feature dimensions"));
    }
    let n = samples.len() as f64;
    let mut mean = vec![0.0; d];
    for s in samples {
        axpy(1.0, s.values(), &mut mean);
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let data = Centered { rows: samples.iter().map(|s| s.values().iter().zip(&mean).map(|(x, m)| x - m).collect()).collect() };
    let total: f64 = data.rows.iter().map(|r| dot(r, r)).sum();
    if total <= 0.0 || !total.is_finite() {
        return Err(Error::Degenerate("samples have zero variance".into()));
    }

    let k = BLOCK.min(d).max(2);
    let mut rng = seeded(INIT_SEED);
    let mut v = Block { cols: (0..k).map(|_| (0..d).map(|_| rng.random::<f64>() - 0.5).collect()).collect() };
    orthonormalize(&mut v, &mut rng);
    let mut cv = Block { cols: vec![vec![0.0; d]; k] };

    let mut ritz: Vec<Vec<f64>> = Vec::new();
    for _ in 0..MAX_ITERS {
        for (c, out) in v.cols.iter().zip(cv.cols.iter_mut()) {
            data.cov_mul(c, out);
        }
        let h: Vec<Vec<f64>> =
            (0..k).map(|a| (0..k).map(|b| 0.5 * (dot(&v.cols[a], &cv.cols[b]) + dot(&v.cols[b], &cv.cols[a]))).collect()).collect();
        let (vals, vecs) = symmetric_eigen(h);
        let rotate = |blk: &Block| -> Vec<Vec<f64>> {
            vecs.iter()
                .map(|e| {
                    let mut col = vec![0.0; d];
                    for (coef, src) in e.iter().zip(&blk.cols) {
                        axpy(*coef, src, &mut col);
                    }
                    col
                })
                .collect()
        };
        let (vr, cvr) = (rotate(&v), rotate(&cv));
        let scale = vals[0].abs().max(f64::MIN_POSITIVE);
        let converged = (0..2).all(|i| {
            let res: f64 = cvr[i].iter().zip(&vr[i]).map(|(a, b)| (a - vals[i] * b).powi(2)).sum::<f64>().sqrt();
            res <= TOL * scale
        });
        ritz = vr;
        if converged {
            break;
        }
        v.cols = cvr;
        orthonormalize(&mut v, &mut rng);
    }

    let mut basis: [Vec<f64>; 2] = [ritz[0].clone(), ritz[1].clone()];
    for row in basis.iter_mut() {
        let norm = dot(row, row).sqrt();
        row.iter_mut().for_each(|x| *x /= norm);
        let lead = row.iter().enumerate().fold(0, |best, (i, x)| if x.abs() > row[best].abs() { i } else { best });
        if row[lead] < 0.0 {
            row.iter_mut().for_each(|x| *x = -*x);
        }
    }

    let mut map = ReducedMap { d, mean, basis, bounds: [[0.0; 2]; 2], grid_n };
    let pts: Vec<[f64; 2]> = samples.iter().map(|s| map.embed(s)).collect::<Result<_>>()?;
    let mut ranges = [[f64::INFINITY, f64::NEG_INFINITY]; 2];
    for p in &pts {
        for a in 0..2 {
            ranges[a][0] = ranges[a][0].min(p[a]);
            ranges[a][1] = ranges[a][1].max(p[a]);
        }
    }
    let widest = (ranges[0][1] - ranges[0][0]).max(ranges[1][1] - ranges[1][0]);
    for (a, [lo, hi]) in ranges.iter().enumerate() {
        let span = hi - lo;
        let pad = if span > 1e-12 * widest { BOUNDS_MARGIN * span } else { (BOUNDS_MARGIN * widest).max(1e-9) };
        map.bounds[a] = [lo - pad, hi + pad];
    }
    Ok(map)
}
