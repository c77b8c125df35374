use std::f64::consts::PI;

use rayon::prelude::*;

use super::{Canvas, Path, Phenotype};
use crate::genome::DrawingParams;
use crate::noise::{NoiseAlgorithm, NoiseField};
use crate::{Error, Result};

/// Weight of the outward component in the spiral style field.
const SPIRAL_RADIAL: f64 = 0.15;
/// z offsets for the two displacement channels, far from the main field.
const DISPLACE_Z: [f64; 2] = [37.5, 71.25];

/// Radical inverse of `index` in `base` (Halton sequence term).
pub fn halton(mut index: u64, base: u64) -> f64 {
    let (mut f, mut r) = (1.0, 0.0);
    while index > 0 {
        f /= base as f64;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

#[derive(Clone, Debug, PartialEq)]
pub struct Agent {
    pub position: [f64; 2],
    /// Heading before edge reflection is applied.
    pub heading: f64,
    pub speed: f64,
    pub pen: u8,
    pub age: u32,
    pub lifetime: u32,
    mirror_x: bool,
    mirror_y: bool,
}

struct Scene {
    width: f64,
    height: f64,
    center: [f64; 2],
    field: NoiseField,
    strength: f64,
    displacement: f64,
    styles: [f64; 3],
    z_position: f64,
    z_scale: f64,
}

impl Scene {
    fn style_direction(&self, p: [f64; 2], fallback: f64) -> f64 {
        let [wl, wc, ws] = self.styles;
        let (dx, dy) = (p[0] - self.center[0], p[1] - self.center[1]);
        let r = (dx * dx + dy * dy).sqrt();
        let (tx, ty, rx, ry) = if r > 1e-9 { (-dy / r, dx / r, dx / r, dy / r) } else { (0.0, 0.0, 0.0, 0.0) };
        let sx = tx + SPIRAL_RADIAL * rx;
        let sy = ty + SPIRAL_RADIAL * ry;
        let vx = wl + wc * tx + ws * sx;
        let vy = wc * ty + ws * sy;
        if vx.abs() < 1e-12 && vy.abs() < 1e-12 {
            fallback
        } else {
            vy.atan2(vx)
        }
    }

    fn noise_at(&self, p: [f64; 2], z: f64) -> f64 {
        if self.strength == 0.0 {
            return 0.0;
        }
        let (mut x, mut y) = (p[0], p[1]);
        if self.displacement > 0.0 {
            let warp = NoiseField { algorithm: NoiseAlgorithm::Perlin, ..self.field.clone() };
            x += self.displacement * warp.eval(p[0], p[1], z + DISPLACE_Z[0]);
            y += self.displacement * warp.eval(p[0], p[1], z + DISPLACE_Z[1]);
        }
        self.field.eval(x, y, z)
    }

    fn step(&self, a: &mut Agent) {
        let t = a.age as f64 / a.lifetime.max(1) as f64;
        let z = self.z_position + self.z_scale * t;
        a.heading = self.style_direction(a.position, a.heading) + self.strength * PI * self.noise_at(a.position, z);
        let mut dx = a.heading.cos();
        let mut dy = a.heading.sin();
        if a.mirror_x {
            dx = -dx;
        }
        if a.mirror_y {
            dy = -dy;
        }
        let mut nx = a.position[0] + a.speed * dx;
        let mut ny = a.position[1] + a.speed * dy;
        if !(0.0..=self.width).contains(&nx) {
            a.mirror_x = !a.mirror_x;
            nx = nx.clamp(0.0, self.width);
        }
        if !(0.0..=self.height).contains(&ny) {
            a.mirror_y = !a.mirror_y;
            ny = ny.clamp(0.0, self.height);
        }
        a.position = [nx, ny];
        a.age += 1;
    }

    fn trace(&self, mut a: Agent) -> Path {
        let mut points = Vec::with_capacity(a.lifetime as usize + 1);
        points.push(a.position);
        while a.age < a.lifetime {
            self.step(&mut a);
            points.push(a.position);
        }
        Path { pen: a.pen, points }
    }
}

/// Pen for agent `i` of `n`: the first `ratio` share uses pen 0, the rest
/// split evenly over the remaining pens.
fn pen_for(i: u32, n: u32, pens: u32, ratio: f64) -> u8 {
    if pens <= 1 {
        return 0;
    }
    let first = (ratio * n as f64).round() as u32;
    if i < first {
        return 0;
    }
    let rest = (n - first).max(1) as u64;
    (1 + (i - first) as u64 * (pens as u64 - 1) / rest) as u8
}

/// Runs every agent to the end of its lifetime. No randomness: agents start
/// on a Halton (2, 3) lattice inside the border.
pub fn simulate(params: &DrawingParams, canvas: Canvas) -> Result<Phenotype> {
    let s = canvas.scale();
    let (w, h) = (canvas.width as f64, canvas.height as f64);
    let border = params.border_width * s;
    if border * 2.0 >= w || border * 2.0 >= h {
        return Err(Error::EmptyDrawableRegion { border, width: canvas.width, height: canvas.height });
    }
    let scene = Scene {
        width: w,
        height: h,
        center: [w / 2.0, h / 2.0],
        field: NoiseField {
            algorithm: params.noise_algorithm,
            freq_x: params.noise_freq_x / s,
            freq_y: params.noise_freq_y / s,
            octaves: params.noise_octaves,
            falloff: params.noise_falloff,
            z: 0.0,
        },
        strength: params.noise_strength,
        displacement: params.noise_displacement * s,
        styles: [params.style_linear, params.style_circular, params.style_spiral],
        z_position: params.z_position,
        z_scale: params.noise_z_scale,
    };
    let n = params.agent_count;
    let agents: Vec<Agent> = (0..n)
        .map(|i| Agent {
            position: [border + halton(i as u64 + 1, 2) * (w - 2.0 * border), border + halton(i as u64 + 1, 3) * (h - 2.0 * border)],
            heading: 0.0,
            speed: params.agent_speed * s,
            pen: pen_for(i, n, params.pen_count, params.pen_ratio),
            age: 0,
            lifetime: params.agent_lifetime,
            mirror_x: false,
            mirror_y: false,
        })
        .collect();
    let paths = agents.into_par_iter().map(|a| scene.trace(a)).collect();
    Ok(Phenotype { canvas, paths })
}
