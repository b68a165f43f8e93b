use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgcore::{convolve_separable, gaussian_kernel, reflect};

pub const SIFT_DIM: usize = 128;
const SPATIAL_BINS: usize = 4;
const ORIENT_BINS: usize = 8;
const CLIP: f32 = 0.2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SiftConfig {
    /// Side of one spatial bin in pixels.
    pub bin_size: usize,
    /// Sampling step in pixels.
    pub stride: usize,
    /// Smoothing scales are `2^(i/3)` for `i` in `0..scales`.
    pub scales: usize,
}

impl Default for SiftConfig {
    fn default() -> Self {
        SiftConfig {
            bin_size: 6,
            stride: 2,
            scales: 5,
        }
    }
}

impl SiftConfig {
    pub fn support(&self) -> usize {
        SPATIAL_BINS * self.bin_size
    }

    pub fn sigma(&self, i: usize) -> f64 {
        2f64.powf(i as f64 / 3.0)
    }

    /// Descriptors per scale on a `w x h` plane.
    pub fn grid(&self, w: usize, h: usize) -> (usize, usize) {
        let s = self.support();
        if w < s || h < s {
            return (0, 0);
        }
        ((w - s) / self.stride + 1, (h - s) / self.stride + 1)
    }
}

/// Dense local descriptors of one patch, row-major `len x 128`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LocalDescriptorSet {
    pub descriptors: Vec<f32>,
    /// Support center and smoothing scale of each descriptor.
    pub positions: Vec<(f32, f32, f32)>,
}

impl LocalDescriptorSet {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn get(&self, i: usize) -> &[f32] {
        &self.descriptors[i * SIFT_DIM..(i + 1) * SIFT_DIM]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f32]> {
        self.descriptors.chunks_exact(SIFT_DIM)
    }

    pub fn push(&mut self, d: &[f32], position: (f32, f32, f32)) {
        assert_eq!(d.len(), SIFT_DIM);
        self.descriptors.extend_from_slice(d);
        self.positions.push(position);
    }
}

/// Box sums of a plane through a summed-area table.
struct Integral {
    w: usize,
    table: Vec<f64>,
}

impl Integral {
    fn new(plane: &[f32], w: usize, h: usize) -> Self {
        let stride = w + 1;
        let mut table = vec![0.0; stride * (h + 1)];
        for y in 0..h {
            let mut row = 0.0;
            for x in 0..w {
                row += plane[y * w + x] as f64;
                table[(y + 1) * stride + x + 1] = table[y * stride + x + 1] + row;
            }
        }
        Integral { w, table }
    }

    fn sum(&self, x: usize, y: usize, side: usize) -> f64 {
        let s = self.w + 1;
        let (x1, y1) = (x + side, y + side);
        self.table[y1 * s + x1] - self.table[y * s + x1] - self.table[y1 * s + x] + self.table[y * s + x]
    }
}

/// Gradient energy split into 8 orientation planes, each gradient shared
/// linearly between its two nearest bins.
fn orientation_planes(plane: &[f64], w: usize, h: usize) -> Vec<Vec<f32>> {
    let at = |x: isize, y: isize| plane[reflect(y, h) * w + reflect(x, w)];
    let mut out = vec![vec![0f32; w * h]; ORIENT_BINS];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let gx = 0.5 * (at(x + 1, y) - at(x - 1, y));
            let gy = 0.5 * (at(x, y + 1) - at(x, y - 1));
            let mag = (gx * gx + gy * gy).sqrt();
            if mag == 0.0 {
                continue;
            }
            let t = gy.atan2(gx).rem_euclid(2.0 * PI) / (2.0 * PI) * ORIENT_BINS as f64;
            let b = t.floor();
            let f = t - b;
            let b0 = b as usize % ORIENT_BINS;
            let i = y as usize * w + x as usize;
            out[b0][i] += (mag * (1.0 - f)) as f32;
            out[(b0 + 1) % ORIENT_BINS][i] += (mag * f) as f32;
        }
    }
    out
}

/// L2 normalization, clipping at 0.2 and renormalization; zero stays zero.
pub fn normalize_sift(d: &mut [f32]) {
    let norm = |d: &[f32]| d.iter().map(|v| v * v).sum::<f32>().sqrt();
    let n = norm(d);
    if n <= 0.0 {
        return;
    }
    d.iter_mut().for_each(|v| *v = (*v / n).min(CLIP));
    let n = norm(d);
    if n > 0.0 {
        d.iter_mut().for_each(|v| *v /= n);
    }
}

/// Dense SIFT over a gray plane: 4 x 4 spatial bins of `bin_size` pixels,
/// 8 orientations, sampled every `stride` pixels at each smoothing scale.
pub fn dense_sift(gray: &[f32], w: usize, h: usize, config: &SiftConfig) -> Result<LocalDescriptorSet> {
    if gray.len() != w * h {
        return Err(Error::invalid(format!("plane of {} samples is not {w}x{h}", gray.len())));
    }
    if config.bin_size == 0 || config.stride == 0 {
        return Err(Error::invalid("SIFT bin size and stride must be positive"));
    }
    let (gw, gh) = config.grid(w, h);
    let mut set = LocalDescriptorSet {
        descriptors: Vec::with_capacity(config.scales * gw * gh * SIFT_DIM),
        positions: Vec::with_capacity(config.scales * gw * gh),
    };
    let plane: Vec<f64> = gray.iter().map(|v| *v as f64).collect();
    let (bin, half) = (config.bin_size, config.support() as f32 / 2.0);
    let mut d = [0f32; SIFT_DIM];
    for i in 0..config.scales {
        let sigma = config.sigma(i);
        let k = gaussian_kernel(sigma, 0);
        let smooth = convolve_separable(&plane, w, h, &k, &k);
        let sums: Vec<Integral> = orientation_planes(&smooth, w, h).iter().map(|p| Integral::new(p, w, h)).collect();
        for gy in 0..gh {
            for gx in 0..gw {
                let (x0, y0) = (gx * config.stride, gy * config.stride);
                for cy in 0..SPATIAL_BINS {
                    for cx in 0..SPATIAL_BINS {
                        for (o, table) in sums.iter().enumerate() {
                            let v = table.sum(x0 + cx * bin, y0 + cy * bin, bin);
                            d[(cy * SPATIAL_BINS + cx) * ORIENT_BINS + o] = v.max(0.0) as f32;
                        }
                    }
                }
                normalize_sift(&mut d);
                set.push(&d, (x0 as f32 + half, y0 as f32 + half, sigma as f32));
            }
        }
    }
    Ok(set)
}
