use std::f64::consts::PI;

use super::FeatureVector;
use crate::draw::Canvas;
use crate::image::GrayImage;
use crate::{Error, Result};

pub const DOWNSAMPLE_SIDE: usize = 32;
pub const ORIENTATION_GRID: usize = 4;
pub const ORIENTATION_BINS: usize = 8;
pub const DESCRIPTOR_DIM: usize = DOWNSAMPLE_SIDE * DOWNSAMPLE_SIDE + ORIENTATION_GRID * ORIENTATION_GRID * ORIENTATION_BINS;

/// Built-in image descriptor: a 32×32 box-downsampled intensity grid
/// followed by 8-bin gradient-orientation histograms on a 4×4 spatial grid.
/// Each of the two blocks is L2-normalized on its own.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Descriptor {
    pub canvas: Canvas,
}

fn l2_normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

impl Descriptor {
    pub fn describe(&self, img: &GrayImage) -> Result<FeatureVector> {
        if (img.width(), img.height()) != (self.canvas.width, self.canvas.height) {
            return Err(Error::ImageSize {
                got_w: img.width(),
                got_h: img.height(),
                want_w: self.canvas.width,
                want_h: self.canvas.height,
            });
        }
        let (w, h) = (img.width() as usize, img.height() as usize);
        if w < DOWNSAMPLE_SIDE || h < DOWNSAMPLE_SIDE {
            return Err(Error::EmptyImage { width: img.width(), height: img.height() });
        }
        let mut out = Vec::with_capacity(DESCRIPTOR_DIM);
        let small = img.downsample(DOWNSAMPLE_SIDE as u32, DOWNSAMPLE_SIDE as u32);
        out.extend(small.pixels().iter().map(|&v| v as f64));
        l2_normalize(&mut out);

        let mut hist = vec![0.0; ORIENTATION_GRID * ORIENTATION_GRID * ORIENTATION_BINS];
        let px = img.pixels();
        let at = |x: usize, y: usize| px[y * w + x] as f64;
        for y in 0..h {
            let (ym, yp) = (y.saturating_sub(1), (y + 1).min(h - 1));
            let cy = y * ORIENTATION_GRID / h;
            for x in 0..w {
                let (xm, xp) = (x.saturating_sub(1), (x + 1).min(w - 1));
                let gx = at(xp, y) - at(xm, y);
                let gy = at(x, yp) - at(x, ym);
                let mag = (gx * gx + gy * gy).sqrt();
                if mag == 0.0 {
                    continue;
                }
                let theta = gy.atan2(gx).rem_euclid(PI);
                let bin = ((theta / PI * ORIENTATION_BINS as f64) as usize).min(ORIENTATION_BINS - 1);
                let cx = x * ORIENTATION_GRID / w;
                hist[(cy * ORIENTATION_GRID + cx) * ORIENTATION_BINS + bin] += mag;
            }
        }
        l2_normalize(&mut hist);
        out.extend(hist);
        Ok(FeatureVector(out))
    }
}

/// Describes a 1024×768 image with the built-in descriptor.
pub fn describe(img: &GrayImage) -> Result<FeatureVector> {
    Descriptor::default().describe(img)
}
