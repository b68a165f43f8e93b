use super::{Descriptor, FeatureVector, PatchContext};
use crate::error::{Error, Result};
use crate::imgcore::Image;

/// Unit displacements at 0, 45, 90 and 135 degrees (x right, y down).
pub const OFFSETS: [(isize, isize); 4] = [(1, 0), (1, -1), (0, -1), (-1, -1)];

/// Normalized symmetric co-occurrence matrix (`levels x levels`, row-major)
/// accumulated over `offsets`.
pub fn glcm(plane: &[u8], w: usize, h: usize, levels: usize, offsets: &[(isize, isize)]) -> Vec<f64> {
    let mut m = vec![0u64; levels * levels];
    for &(dx, dy) in offsets {
        for y in 0..h {
            let ny = y as isize + dy;
            if ny < 0 || ny >= h as isize {
                continue;
            }
            for x in 0..w {
                let nx = x as isize + dx;
                if nx < 0 || nx >= w as isize {
                    continue;
                }
                let a = plane[y * w + x] as usize;
                let b = plane[ny as usize * w + nx as usize] as usize;
                m[a * levels + b] += 1;
                m[b * levels + a] += 1;
            }
        }
    }
    let total: u64 = m.iter().sum();
    m.iter()
        .map(|v| if total > 0 { *v as f64 / total as f64 } else { 0.0 })
        .collect()
}

/// Contrast, correlation, energy, entropy and homogeneity of a normalized
/// symmetric matrix. Zero variance gives correlation 1.
pub fn haralick(p: &[f64], levels: usize) -> [f64; 5] {
    let (mut mu, mut contrast, mut energy, mut entropy, mut homog) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..levels {
        for j in 0..levels {
            let v = p[i * levels + j];
            if v == 0.0 {
                continue;
            }
            let d = i as f64 - j as f64;
            mu += i as f64 * v;
            contrast += d * d * v;
            energy += v * v;
            entropy -= v * v.ln();
            homog += v / (1.0 + d * d);
        }
    }
    let (mut var, mut cov) = (0.0, 0.0);
    for i in 0..levels {
        for j in 0..levels {
            let v = p[i * levels + j];
            if v == 0.0 {
                continue;
            }
            var += (i as f64 - mu).powi(2) * v;
            cov += (i as f64 - mu) * (j as f64 - mu) * v;
        }
    }
    let correlation = if var <= 1e-12 { 1.0 } else { cov / var };
    [contrast, correlation, energy, entropy, homog]
}

/// Haralick statistics of the 4-offset co-occurrence matrix, for luminance
/// or per RGB channel.
pub struct CooccurrenceDescriptor {
    per_channel: bool,
    levels: usize,
}

impl CooccurrenceDescriptor {
    pub fn new(per_channel: bool, levels: usize) -> Result<Self> {
        if !(2..=256).contains(&levels) {
            return Err(Error::invalid(format!("co-occurrence levels {levels} outside 2..=256")));
        }
        Ok(CooccurrenceDescriptor { per_channel, levels })
    }

    fn requantize(&self, codes: &[u8]) -> Vec<u8> {
        codes.iter().map(|v| (*v as usize * self.levels / 256) as u8).collect()
    }
}

impl Descriptor for CooccurrenceDescriptor {
    fn name(&self) -> &str {
        if self.per_channel {
            "coocc-rgb"
        } else {
            "coocc-l"
        }
    }

    fn dim(&self) -> usize {
        if self.per_channel {
            15
        } else {
            5
        }
    }

    fn compute(&self, ctx: &PatchContext) -> Result<Vec<f64>> {
        let (w, h) = (ctx.width(), ctx.height());
        let channels: Vec<Vec<u8>> = if self.per_channel {
            ctx.q8().iter().map(|c| self.requantize(c)).collect()
        } else {
            vec![self.requantize(ctx.gray_q8())]
        };
        Ok(channels
            .iter()
            .flat_map(|c| haralick(&glcm(c, w, h, self.levels, &OFFSETS), self.levels))
            .collect())
    }
}

pub fn cooccurrence(img: &Image, per_channel: bool) -> Result<FeatureVector> {
    CooccurrenceDescriptor::new(per_channel, 64)?.extract(img)
}
