//! Deterministic 3-D lattice noise: value noise, improved Perlin noise with
//! an analytic gradient, fractal sums, ridged noise and a divergence-free
//! curl flow derived from the Perlin potential.
//!
//! No seeds: the permutation table is fixed, so a field is a pure function
//! of its parameters and the sample point.

use serde::{Deserialize, Serialize};

pub use crate::genome::NoiseAlgorithm;

#[rustfmt::skip]
const PERM: [u8; 256] = [
    151, 160, 137, 91, 90, 15, 131, 13, 201, 95, 96, 53, 194, 233, 7, 225,
    140, 36, 103, 30, 69, 142, 8, 99, 37, 240, 21, 10, 23, 190, 6, 148,
    247, 120, 234, 75, 0, 26, 197, 62, 94, 252, 219, 203, 117, 35, 11, 32,
    57, 177, 33, 88, 237, 149, 56, 87, 174, 20, 125, 136, 171, 168, 68, 175,
    74, 165, 71, 134, 139, 48, 27, 166, 77, 146, 158, 231, 83, 111, 229, 122,
    60, 211, 133, 230, 220, 105, 92, 41, 55, 46, 245, 40, 244, 102, 143, 54,
    65, 25, 63, 161, 1, 216, 80, 73, 209, 76, 132, 187, 208, 89, 18, 169,
    200, 196, 135, 130, 116, 188, 159, 86, 164, 100, 109, 198, 173, 186, 3, 64,
    52, 217, 226, 250, 124, 123, 5, 202, 38, 147, 118, 126, 255, 82, 85, 212,
    207, 206, 59, 227, 47, 16, 58, 17, 182, 189, 28, 42, 223, 183, 170, 213,
    119, 248, 152, 2, 44, 154, 163, 70, 221, 153, 101, 155, 167, 43, 172, 9,
    129, 22, 39, 253, 19, 98, 108, 110, 79, 113, 224, 232, 178, 185, 112, 104,
    218, 246, 97, 228, 251, 34, 242, 193, 238, 210, 144, 12, 191, 179, 162, 241,
    81, 51, 145, 235, 249, 14, 239, 107, 49, 192, 214, 31, 181, 199, 106, 157,
    184, 84, 204, 176, 115, 121, 50, 45, 127, 4, 150, 254, 138, 236, 205, 93,
    222, 114, 67, 29, 24, 72, 243, 141, 128, 195, 78, 66, 215, 61, 156, 180,];

#[inline]
fn hash(i: i64) -> usize {
    PERM[(i & 255) as usize] as usize
}

#[inline]
fn hash3(x: i64, y: i64, z: i64) -> usize {
    hash(hash(hash(x) as i64 + y) as i64 + z)
}

/// `f64::floor` without the libm call; exact for |x| < 2^52.
#[inline]
fn floor(x: f64) -> f64 {
    let t = x as i64 as f64;
    if t > x {
        t - 1.0
    } else {
        t
    }
}

#[inline]
fn fade(t: f64) -> f64 {
    t * t * t * (t * (t * 6.0 - 15.0) + 10.0)
}

#[inline]
fn dfade(t: f64) -> f64 {
    30.0 * t * t * (t * (t - 2.0) + 1.0)
}

#[inline]
fn gradient(h: usize) -> [f64; 3] {
    match h & 15 {
        0 | 12 => [1.0, 1.0, 0.0],
        1 | 13 => [-1.0, 1.0, 0.0],
        2 => [1.0, -1.0, 0.0],
        3 => [-1.0, -1.0, 0.0],
        4 => [1.0, 0.0, 1.0],
        5 => [-1.0, 0.0, 1.0],
        6 => [1.0, 0.0, -1.0],
        7 => [-1.0, 0.0, -1.0],
        8 => [0.0, 1.0, 1.0],
        9 | 14 => [0.0, -1.0, 1.0],
        10 => [0.0, 1.0, -1.0],
        _ => [0.0, -1.0, -1.0],
    }
}

/// Trilinear blend weights of the eight cell corners, indexed `dx | dy<<1 | dz<<2`.
#[inline]
fn corner_weights(u: f64, v: f64, w: f64) -> [f64; 8] {
    let mut out = [0.0; 8];
    for (c, o) in out.iter_mut().enumerate() {
        let wx = if c & 1 == 0 { 1.0 - u } else { u };
        let wy = if c & 2 == 0 { 1.0 - v } else { v };
        let wz = if c & 4 == 0 { 1.0 - w } else { w };
        *o = wx * wy * wz;
    }
    out
}

#[inline]
fn grad_dot(h: usize, x: f64, y: f64, z: f64) -> f64 {
    match h & 15 {
        0 | 12 => x + y,
        1 | 13 => -x + y,
        2 => x - y,
        3 => -x - y,
        4 => x + z,
        5 => -x + z,
        6 => x - z,
        7 => -x - z,
        8 => y + z,
        9 | 14 => -y + z,
        10 => y - z,
        _ => -y - z,
    }
}

/// Coefficients of the trilinear polynomial through the corner values.
#[inline]
fn coefficients(vals: &[f64; 8]) -> [f64; 8] {
    [
        vals[0],
        vals[1] - vals[0],
        vals[2] - vals[0],
        vals[4] - vals[0],
        vals[0] - vals[1] - vals[2] + vals[3],
        vals[0] - vals[2] - vals[4] + vals[6],
        vals[0] - vals[1] - vals[4] + vals[5],
        -vals[0] + vals[1] + vals[2] - vals[3] + vals[4] - vals[5] - vals[6] + vals[7],
    ]
}

#[inline]
fn blend(vals: &[f64; 8], u: f64, v: f64, w: f64) -> f64 {
    let [k0, k1, k2, k3, k4, k5, k6, k7] = coefficients(vals);
    k0 + k1 * u + k2 * v + k3 * w + k4 * u * v + k5 * v * w + k6 * w * u + k7 * u * v * w
}

/// Improved Perlin noise value; equal to `perlin3(..).0` without the
/// gradient work.
pub fn perlin(x: f64, y: f64, z: f64) -> f64 {
    let (xf, yf, zf) = (floor(x), floor(y), floor(z));
    let (ix, iy, iz) = (xf as i64, yf as i64, zf as i64);
    let (fx, fy, fz) = (x - xf, y - yf, z - zf);
    let (a, b) = (hash(ix), hash(ix + 1));
    let (aa, ab) = (hash(a as i64 + iy), hash(a as i64 + iy + 1));
    let (ba, bb) = (hash(b as i64 + iy), hash(b as i64 + iy + 1));
    let h = |xy: usize, dz: i64| hash(xy as i64 + iz + dz);
    let vals = [
        grad_dot(h(aa, 0), fx, fy, fz),
        grad_dot(h(ba, 0), fx - 1.0, fy, fz),
        grad_dot(h(ab, 0), fx, fy - 1.0, fz),
        grad_dot(h(bb, 0), fx - 1.0, fy - 1.0, fz),
        grad_dot(h(aa, 1), fx, fy, fz - 1.0),
        grad_dot(h(ba, 1), fx - 1.0, fy, fz - 1.0),
        grad_dot(h(ab, 1), fx, fy - 1.0, fz - 1.0),
        grad_dot(h(bb, 1), fx - 1.0, fy - 1.0, fz - 1.0),
    ];
    blend(&vals, fade(fx), fade(fy), fade(fz))
}

/// Improved Perlin noise and its gradient. Zero at every integer lattice point.
pub fn perlin3(x: f64, y: f64, z: f64) -> (f64, [f64; 3]) {
    let (xf, yf, zf) = (floor(x), floor(y), floor(z));
    let (ix, iy, iz) = (xf as i64, yf as i64, zf as i64);
    let (fx, fy, fz) = (x - xf, y - yf, z - zf);
    let (u, v, w) = (fade(fx), fade(fy), fade(fz));
    let (du, dv, dw) = (dfade(fx), dfade(fy), dfade(fz));

    let mut vals = [0.0; 8];
    let mut grads = [[0.0; 3]; 8];
    for c in 0..8 {
        let (cx, cy, cz) = ((c & 1) as i64, ((c >> 1) & 1) as i64, ((c >> 2) & 1) as i64);
        let g = gradient(hash3(ix + cx, iy + cy, iz + cz));
        let d = [fx - cx as f64, fy - cy as f64, fz - cz as f64];
        vals[c] = g[0] * d[0] + g[1] * d[1] + g[2] * d[2];
        grads[c] = g;
    }

    let value = blend(&vals, u, v, w);

    let cw = corner_weights(u, v, w);
    let mut grad = [0.0; 3];
    for c in 0..8 {
        for (a, g) in grad.iter_mut().enumerate() {
            *g += cw[c] * grads[c][a];
        }
    }
    let [_, k1, k2, k3, k4, k5, k6, k7] = coefficients(&vals);
    grad[0] += du * (k1 + k4 * v + k6 * w + k7 * v * w);
    grad[1] += dv * (k2 + k5 * w + k4 * u + k7 * w * u);
    grad[2] += dw * (k3 + k6 * u + k5 * v + k7 * u * v);
    (value, grad)
}

/// Smoothly interpolated hashed lattice values in `[-1, 1]`.
pub fn value3(x: f64, y: f64, z: f64) -> f64 {
    let (xf, yf, zf) = (floor(x), floor(y), floor(z));
    let (ix, iy, iz) = (xf as i64, yf as i64, zf as i64);
    let cw = corner_weights(fade(x - xf), fade(y - yf), fade(z - zf));
    let mut acc = 0.0;
    for (c, w) in cw.iter().enumerate() {
        let h = hash3(ix + (c & 1) as i64, iy + ((c >> 1) & 1) as i64, iz + ((c >> 2) & 1) as i64);
        acc += w * (h as f64 / 127.5 - 1.0);
    }
    acc
}

/// A scalar noise field over canvas pixels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseField {
    pub algorithm: NoiseAlgorithm,
    /// Base frequency in cycles per pixel.
    pub freq_x: f64,
    pub freq_y: f64,
    pub octaves: u32,
    /// Per-octave amplitude ratio.
    pub falloff: f64,
    /// Offset added to every sampled z.
    pub z: f64,
}

impl NoiseField {
    pub fn perlin(freq: f64) -> Self {
        NoiseField { algorithm: NoiseAlgorithm::Perlin, freq_x: freq, freq_y: freq, octaves: 1, falloff: 0.5, z: 0.0 }
    }

    fn octave_count(&self) -> u32 {
        match self.algorithm {
            NoiseAlgorithm::Perlin => 1,
            _ => self.octaves.max(1),
        }
    }

    /// Sums `f(u, v, w, scale)` over octaves, normalized by total amplitude.
    fn fractal(&self, x: f64, y: f64, z: f64, f: impl Fn(f64, f64, f64) -> f64) -> f64 {
        let (mut sum, mut norm, mut amp, mut scale) = (0.0, 0.0, 1.0, 1.0);
        let zz = z + self.z;
        for _ in 0..self.octave_count() {
            sum += amp * f(x * self.freq_x * scale, y * self.freq_y * scale, zz * scale);
            norm += amp;
            amp *= self.falloff;
            scale *= 2.0;
        }
        sum / norm
    }

    /// Gradient of the fractal Perlin potential, in units per pixel.
    fn potential_gradient(&self, x: f64, y: f64, z: f64) -> [f64; 2] {
        let (mut gx, mut gy, mut norm, mut amp, mut scale) = (0.0, 0.0, 0.0, 1.0, 1.0);
        let zz = z + self.z;
        for _ in 0..self.octave_count() {
            let (_, g) = perlin3(x * self.freq_x * scale, y * self.freq_y * scale, zz * scale);
            gx += amp * g[0] * self.freq_x * scale;
            gy += amp * g[1] * self.freq_y * scale;
            norm += amp;
            amp *= self.falloff;
            scale *= 2.0;
        }
        [gx / norm, gy / norm]
    }

    /// Divergence-free flow `(dψ/dy, -dψ/dx)` of the fractal Perlin potential ψ.
    pub fn curl(&self, x: f64, y: f64, z: f64) -> [f64; 2] {
        let [gx, gy] = self.potential_gradient(x, y, z);
        [gy, -gx]
    }

    /// Samples the field at pixel `(x, y)` and depth `z`. Output lies in `[-1, 1]`.
    ///
    /// The curl variant returns the direction angle of its flow divided by π.
    pub fn eval(&self, x: f64, y: f64, z: f64) -> f64 {
        let raw = match self.algorithm {
            NoiseAlgorithm::Value => self.fractal(x, y, z, value3),
            NoiseAlgorithm::Perlin | NoiseAlgorithm::FbmPerlin => self.fractal(x, y, z, |u, v, w| perlin(u, v, w).clamp(-1.0, 1.0)),
            NoiseAlgorithm::Ridged => self.fractal(x, y, z, |u, v, w| 1.0 - 2.0 * perlin(u, v, w).abs().min(1.0)),
            NoiseAlgorithm::CurlPerlin => {
                let [vx, vy] = self.curl(x, y, z);
                if vx == 0.0 && vy == 0.0 {
                    0.0
                } else {
                    vy.atan2(vx) / std::f64::consts::PI
                }
            }
        };
        raw.clamp(-1.0, 1.0)
    }
}

pub fn noise_eval(field: &NoiseField, x: f64, y: f64, z: f64) -> f64 {
    field.eval(x, y, z)
}
