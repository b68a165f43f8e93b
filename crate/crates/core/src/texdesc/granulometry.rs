use serde::{Deserialize, Serialize};

use super::{Descriptor, FeatureVector, PatchContext};
use crate::error::{Error, Result};
use crate::imgcore::{reflect, Image};

/// Unit pixel steps at 0, 45, 90 and 135 degrees (x right, y down).
pub const ANGLE_STEPS: [(isize, isize); 4] = [(1, 0), (1, -1), (0, -1), (-1, -1)];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GranulometryConfig {
    /// Increasing structuring-element lengths in pixels.
    pub sizes: Vec<usize>,
}

impl Default for GranulometryConfig {
    fn default() -> Self {
        GranulometryConfig { sizes: vec![3, 5] }
    }
}

/// Pixel count of a digital line of Euclidean `length` along `step`, each
/// pixel covering one step.
pub fn line_pixels(length: usize, step: (isize, isize)) -> usize {
    if step.0 != 0 && step.1 != 0 {
        ((length as f64 / std::f64::consts::SQRT_2).round() as usize).max(1)
    } else {
        length.max(1)
    }
}

fn line_offsets(n: usize, step: (isize, isize)) -> Vec<(isize, isize)> {
    let c = (n as isize - 1) / 2;
    (0..n as isize).map(|t| ((t - c) * step.0, (t - c) * step.1)).collect()
}

/// Plane extended by reflection on every side.
struct Padded {
    data: Vec<f32>,
    pw: usize,
    margin: usize,
}

impl Padded {
    fn new(plane: &[f32], w: usize, h: usize, margin: usize) -> Self {
        let (pw, ph) = (w + 2 * margin, h + 2 * margin);
        let mut data = Vec::with_capacity(pw * ph);
        for y in 0..ph as isize {
            let src = &plane[reflect(y - margin as isize, h) * w..][..w];
            data.extend((0..margin as isize).map(|x| src[reflect(x - margin as isize, w)]));
            data.extend_from_slice(src);
            data.extend((0..margin as isize).map(|x| src[reflect(w as isize + x, w)]));
        }
        Padded { data, pw, margin }
    }

    /// Opening restricted to the original frame, as rows of width `w`.
    fn opening(&self, w: usize, h: usize, length: usize, step: (isize, isize)) -> Vec<f32> {
        let offsets = line_offsets(line_pixels(length, step), step);
        let r = offsets.iter().map(|(dx, dy)| dx.abs().max(dy.abs())).max().unwrap_or(0) as usize;
        assert!(2 * r <= self.margin, "padding too small for the element");
        let (m, pw) = (self.margin as isize, self.pw);
        let row = |x: isize, y: isize, len: usize| {
            let start = y as usize * pw + x as usize;
            start..start + len
        };
        // Erosion on the frame grown by r, then dilation back onto the frame.
        let (ex, ew) = (m - r as isize, w + 2 * r);
        let mut eroded = vec![0f32; ew * (h + 2 * r)];
        for (erow, y) in eroded.chunks_exact_mut(ew).zip(ex..) {
            erow.fill(f32::INFINITY);
            for &(dx, dy) in &offsets {
                for (e, v) in erow.iter_mut().zip(&self.data[row(ex + dx, y + dy, ew)]) {
                    *e = e.min(*v);
                }
            }
        }
        let mut out = vec![f32::NEG_INFINITY; w * h];
        for (orow, y) in out.chunks_exact_mut(w).zip(r as isize..) {
            for &(dx, dy) in &offsets {
                let start = (y - dy) as usize * ew + (r as isize - dx) as usize;
                for (o, v) in orow.iter_mut().zip(&eroded[start..start + w]) {
                    *o = o.max(*v);
                }
            }
        }
        out
    }
}

fn element_radius(length: usize, step: (isize, isize)) -> usize {
    let n = line_pixels(length, step);
    n / 2
}

/// Morphological opening of `plane` by a line of `length` along `step`.
/// The plane is extended by reflection before eroding, so border pixels see
/// the same values as interior ones would.
pub fn opening_line(plane: &[f32], w: usize, h: usize, length: usize, step: (isize, isize)) -> Vec<f32> {
    let margin = 2 * element_radius(length, step);
    Padded::new(plane, w, h, margin).opening(w, h, length, step)
}

/// Pattern spectrum of openings by linear elements, per RGB channel, angle
/// and ladder size. The entry for size `L_k` is the mass removed between
/// `L_k` and the next size (`L_K + 2` after the last), over the channel mass.
pub struct GranulometryDescriptor {
    sizes: Vec<usize>,
}

impl GranulometryDescriptor {
    pub fn new(config: GranulometryConfig) -> Result<Self> {
        let s = &config.sizes;
        if s.is_empty() || s[0] == 0 || s.windows(2).any(|p| p[0] >= p[1]) {
            return Err(Error::invalid(format!(
                "granulometry sizes must be positive and increasing, got {s:?}"
            )));
        }
        Ok(GranulometryDescriptor { sizes: config.sizes })
    }

    /// Spectrum of one plane, angle-major.
    pub fn spectrum(&self, plane: &[f32], w: usize, h: usize) -> Vec<f64> {
        let total: f64 = plane.iter().map(|v| *v as f64).sum();
        let mut ladder = self.sizes.clone();
        ladder.push(self.sizes[self.sizes.len() - 1] + 2);
        let margin = 2 * element_radius(ladder[ladder.len() - 1], (1, 0));
        let padded = Padded::new(plane, w, h, margin);
        let mut out = Vec::with_capacity(4 * self.sizes.len());
        for step in ANGLE_STEPS {
            let mass: Vec<f64> = ladder
                .iter()
                .map(|l| {
                    let o = padded.opening(w, h, *l, step);
                    o.chunks(256).map(|c| c.iter().map(|v| *v as f64).sum::<f64>()).sum()
                })
                .collect();
            for k in 0..self.sizes.len() {
                out.push(if total > 0.0 { (mass[k] - mass[k + 1]) / total } else { 0.0 });
            }
        }
        out
    }
}

impl Descriptor for GranulometryDescriptor {
    fn name(&self) -> &str {
        "granulometry"
    }

    fn dim(&self) -> usize {
        3 * 4 * self.sizes.len()
    }

    fn compute(&self, ctx: &PatchContext) -> Result<Vec<f64>> {
        let (w, h) = (ctx.width(), ctx.height());
        Ok(ctx.planes().iter().flat_map(|p| self.spectrum(p, w, h)).collect())
    }
}

pub fn granulometry(img: &Image, config: &GranulometryConfig) -> Result<FeatureVector> {
    GranulometryDescriptor::new(config.clone())?.extract(img)
}
