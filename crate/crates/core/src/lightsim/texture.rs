use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgcore::{ColorSpace, Image, IMAGE_SIDE};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    Granular,
    Blob,
    Stripe,
    MultifractalNoise,
}

impl Generator {
    pub const ALL: [Generator; 4] = [
        Generator::Granular,
        Generator::Blob,
        Generator::Stripe,
        Generator::MultifractalNoise,
    ];
}

/// Recipe for one synthetic albedo texture.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticClassSpec {
    pub class_id: u16,
    pub generator: Generator,
    /// Linear-RGB albedo of the dominant material.
    pub base_albedo: [f64; 3],
    /// Characteristic feature size in pixels.
    pub grain_scale: f64,
    pub seed: u64,
    /// Gradient direction of stripe textures (degrees); ignored otherwise.
    #[serde(default)]
    pub angle_deg: f64,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn hash2(seed: u64, x: i64, y: i64) -> u64 {
    splitmix(seed ^ splitmix((x as u64).wrapping_mul(0x1f1f_1f1f) ^ splitmix(y as u64)))
}

/// Uniform value in [0, 1) attached to a lattice point.
fn lattice(seed: u64, x: i64, y: i64) -> f64 {
    (hash2(seed, x, y) >> 11) as f64 / (1u64 << 53) as f64
}

fn smooth(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

fn value_noise(seed: u64, x: f64, y: f64) -> f64 {
    let (x0, y0) = (x.floor(), y.floor());
    let (tx, ty) = (smooth(x - x0), smooth(y - y0));
    let (ix, iy) = (x0 as i64, y0 as i64);
    let a = lattice(seed, ix, iy);
    let b = lattice(seed, ix + 1, iy);
    let c = lattice(seed, ix, iy + 1);
    let d = lattice(seed, ix + 1, iy + 1);
    let top = a + (b - a) * tx;
    let bottom = c + (d - c) * tx;
    top + (bottom - top) * ty
}

/// Fractional Brownian motion in [0, 1].
fn fbm(seed: u64, x: f64, y: f64, octaves: u32) -> f64 {
    let (mut sum, mut amp, mut norm, mut freq) = (0.0, 1.0, 0.0, 1.0);
    for o in 0..octaves {
        sum += amp * value_noise(seed.wrapping_add(o as u64 * 7919), x * freq, y * freq);
        norm += amp;
        amp *= 0.55;
        freq *= 2.0;
    }
    sum / norm
}

fn accent(spec: &SyntheticClassSpec) -> [f64; 3] {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix(spec.seed ^ 0xacce));
    let shift: [f64; 3] = [0, 1, 2].map(|_| rng.gen_range(-0.25..0.25));
    let dark = rng.gen_range(0.45..0.8);
    [0, 1, 2].map(|c| (spec.base_albedo[c] * dark + shift[c] * 0.5).clamp(0.02, 0.95))
}

/// Renders the deterministic 800×800 linear-RGB albedo of `spec`.
pub fn generate_texture(spec: &SyntheticClassSpec) -> Result<Image> {
    if !(spec.grain_scale >= 1.0 && spec.grain_scale.is_finite()) {
        return Err(Error::invalid(format!("grain scale {} must be >= 1", spec.grain_scale)));
    }
    if spec.base_albedo.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::invalid("base albedo outside [0, 1]"));
    }
    let n = IMAGE_SIDE;
    let s = spec.grain_scale;
    let seed = splitmix(spec.seed);
    let base = spec.base_albedo;
    let acc = accent(spec);
    // t in [0, 1] blends base toward accent; `g` is a fine multiplicative grain.
    let mix: Box<dyn Fn(usize, usize) -> f64> = match spec.generator {
        Generator::Granular => Box::new(move |x, y| {
            let (px, py) = (x as f64 / s, y as f64 / s);
            let (cx, cy) = (px.floor() as i64, py.floor() as i64);
            let (mut best, mut second, mut id) = (f64::MAX, f64::MAX, (0, 0));
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (gx, gy) = (cx + dx, cy + dy);
                    let h = hash2(seed, gx, gy);
                    let fx = gx as f64 + (h & 0xffff) as f64 / 65536.0;
                    let fy = gy as f64 + ((h >> 16) & 0xffff) as f64 / 65536.0;
                    let d = (fx - px).powi(2) + (fy - py).powi(2);
                    if d < best {
                        second = best;
                        best = d;
                        id = (gx, gy);
                    } else if d < second {
                        second = d;
                    }
                }
            }
            let edge = ((second.sqrt() - best.sqrt()) * 4.0).min(1.0);
            lattice(seed ^ 0x55, id.0, id.1) * (0.6 + 0.4 * edge)
        }),
        Generator::Blob => Box::new(move |x, y| {
            let (px, py) = (x as f64 / (2.0 * s), y as f64 / (2.0 * s));
            let (cx, cy) = (px.floor() as i64, py.floor() as i64);
            let mut acc = 0.0f64;
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (gx, gy) = (cx + dx, cy + dy);
                    let h = hash2(seed, gx, gy);
                    let fx = gx as f64 + (h & 0xffff) as f64 / 65536.0;
                    let fy = gy as f64 + ((h >> 16) & 0xffff) as f64 / 65536.0;
                    let r = 0.25 + 0.35 * ((h >> 32) & 0xffff) as f64 / 65536.0;
                    let d2 = (fx - px).powi(2) + (fy - py).powi(2);
                    acc = acc.max((-d2 / (2.0 * r * r)).exp());
                }
            }
            acc
        }),
        Generator::Stripe => {
            let (c, si) = (spec.angle_deg.to_radians().cos(), spec.angle_deg.to_radians().sin());
            Box::new(move |x, y| {
                let u = x as f64 * c + y as f64 * si;
                let phase = 0.3 * fbm(seed, x as f64 / (4.0 * s), y as f64 / (4.0 * s), 2);
                0.5 + 0.5 * (2.0 * std::f64::consts::PI * (u / s + phase)).sin()
            })
        }
        Generator::MultifractalNoise => {
            Box::new(move |x, y| fbm(seed, x as f64 / s, y as f64 / s, 5).powf(1.5) * 1.6)
        }
    };
    let grain_seed = seed ^ 0x6a09_e667;
    let img = Image::from_fn(n, n, ColorSpace::LinearRgb, |x, y| {
        let t = mix(x, y).clamp(0.0, 1.0);
        let g = 0.92 + 0.16 * lattice(grain_seed, x as i64, y as i64);
        [0, 1, 2].map(|c| ((base[c] + (acc[c] - base[c]) * t) * g).clamp(0.0, 1.0) as f32)
    })?;
    Ok(img)
}

/// Specs for a synthetic corpus of `classes` classes; class `k` uses
/// generator `k % 4` and hues spread around the color wheel.
pub fn corpus_specs(classes: usize, seed: u64) -> Vec<SyntheticClassSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..classes)
        .map(|k| {
            let hue = (k as f64 * 0.618_033_988_75 + rng.gen_range(0.0..0.1)).fract();
            let sat = rng.gen_range(0.25..0.6);
            let val = rng.gen_range(0.35..0.7);
            let base = hsv_to_rgb(hue, sat, val);
            SyntheticClassSpec {
                class_id: k as u16,
                generator: Generator::ALL[k % 4],
                base_albedo: base,
                grain_scale: rng.gen_range(5.0..16.0),
                seed: rng.gen(),
                angle_deg: rng.gen_range(0.0..180.0f64).round(),
            }
        })
        .collect()
}

fn hsv_to_rgb(h: f64, s: f64, v: f64) -> [f64; 3] {
    let h6 = h * 6.0;
    let i = h6.floor() as i32 % 6;
    let f = h6 - h6.floor();
    let (p, q, t) = (v * (1.0 - s), v * (1.0 - s * f), v * (1.0 - s * (1.0 - f)));
    match i {
        0 => [v, t, p],
        1 => [q, v, p],
        2 => [p, v, t],
        3 => [p, q, v],
        4 => [t, p, v],
        _ => [v, p, q],
    }
}
