use super::Phenotype;
use crate::image::GrayImage;

/// Subsamples per pixel along each axis.
const SUPERSAMPLE: usize = 2;

struct Mask {
    w: usize,
    h: usize,
    bits: Vec<bool>,
}

impl Mask {
    /// Inks every subsample whose center lies within `radius` of segment `a`-`b`.
    fn stroke(&mut self, a: [f64; 2], b: [f64; 2], radius: f64) {
        let ss = SUPERSAMPLE as f64;
        let (ax, ay, bx, by) = (a[0] * ss, a[1] * ss, b[0] * ss, b[1] * ss);
        let r = radius * ss;
        let r2 = r * r;
        let x0 = ((ax.min(bx) - r - 0.5).floor().max(0.0)) as usize;
        let y0 = ((ay.min(by) - r - 0.5).floor().max(0.0)) as usize;
        let x1 = ((ax.max(bx) + r + 0.5).ceil().max(0.0) as usize).min(self.w);
        let y1 = ((ay.max(by) + r + 0.5).ceil().max(0.0) as usize).min(self.h);
        let (dx, dy) = (bx - ax, by - ay);
        let len2 = dx * dx + dy * dy;
        for y in y0..y1 {
            let py = y as f64 + 0.5;
            let row = &mut self.bits[y * self.w..(y + 1) * self.w];
            for (x, bit) in row.iter_mut().enumerate().take(x1).skip(x0) {
                if *bit {
                    continue;
                }
                let px = x as f64 + 0.5;
                let t = if len2 > 0.0 { (((px - ax) * dx + (py - ay) * dy) / len2).clamp(0.0, 1.0) } else { 0.0 };
                let (qx, qy) = (ax + t * dx - px, ay + t * dy - py);
                if qx * qx + qy * qy <= r2 {
                    *bit = true;
                }
            }
        }
    }
}

/// White background, black round-capped strokes at pen widths, 2×2
/// supersampling. Overlapping strokes never darken past full ink.
pub fn rasterize(p: &Phenotype) -> GrayImage {
    let (w, h) = (p.canvas.width as usize, p.canvas.height as usize);
    let mut mask = Mask { w: w * SUPERSAMPLE, h: h * SUPERSAMPLE, bits: vec![false; w * h * SUPERSAMPLE * SUPERSAMPLE] };
    for path in &p.paths {
        let radius = p.stroke_width(path.pen) / 2.0;
        match path.points.as_slice() {
            [] => {}
            [only] => mask.stroke(*only, *only, radius),
            pts => {
                for seg in pts.windows(2) {
                    mask.stroke(seg[0], seg[1], radius);
                }
            }
        }
    }
    let per_pixel = (SUPERSAMPLE * SUPERSAMPLE) as f32;
    let mut data = vec![0.0f32; w * h];
    for (y, row) in data.chunks_mut(w).enumerate() {
        for (x, v) in row.iter_mut().enumerate() {
            let mut inked = 0;
            for sy in 0..SUPERSAMPLE {
                let base = (y * SUPERSAMPLE + sy) * mask.w + x * SUPERSAMPLE;
                inked += mask.bits[base..base + SUPERSAMPLE].iter().filter(|&&b| b).count();
            }
            *v = 1.0 - inked as f32 / per_pixel;
        }
    }
    GrayImage::from_pixels(w as u32, h as u32, data)
}
