use std::f64::consts::PI;

use super::{Descriptor, FeatureVector, PatchContext};
use crate::error::Result;
use crate::imgcore::{reflect, Image};

pub const HOG_CELLS: usize = 3;
pub const HOG_BINS: usize = 9;

/// Unsigned orientation bin (20 degree sectors over [0, 180)) of a gradient.
pub fn orientation_bin(gx: f64, gy: f64) -> usize {
    let mut a = gy.atan2(gx);
    if a < 0.0 {
        a += PI;
    }
    if a >= PI {
        a -= PI;
    }
    ((a / (PI / HOG_BINS as f64)) as usize).min(HOG_BINS - 1)
}

/// Luminance gradient histograms on a 3 x 3 cell grid, magnitude-weighted,
/// each cell L2-normalized.
pub struct HogDescriptor;

impl HogDescriptor {
    pub fn histogram(gray: &[f32], w: usize, h: usize) -> Vec<f64> {
        let at = |x: isize, y: isize| gray[reflect(y, h) * w + reflect(x, w)] as f64;
        let mut out = vec![0.0; HOG_CELLS * HOG_CELLS * HOG_BINS];
        for cy in 0..HOG_CELLS {
            let (y0, y1) = (cy * h / HOG_CELLS, (cy + 1) * h / HOG_CELLS);
            for cx in 0..HOG_CELLS {
                let (x0, x1) = (cx * w / HOG_CELLS, (cx + 1) * w / HOG_CELLS);
                let cell = &mut out[(cy * HOG_CELLS + cx) * HOG_BINS..][..HOG_BINS];
                for y in y0 as isize..y1 as isize {
                    for x in x0 as isize..x1 as isize {
                        let gx = at(x + 1, y) - at(x - 1, y);
                        let gy = at(x, y + 1) - at(x, y - 1);
                        let mag = (gx * gx + gy * gy).sqrt();
                        if mag > 0.0 {
                            cell[orientation_bin(gx, gy)] += mag;
                        }
                    }
                }
                let norm = cell.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm > 0.0 {
                    cell.iter_mut().for_each(|v| *v /= norm);
                }
            }
        }
        out
    }
}

impl Descriptor for HogDescriptor {
    fn name(&self) -> &str {
        "hog"
    }

    fn dim(&self) -> usize {
        HOG_CELLS * HOG_CELLS * HOG_BINS
    }

    fn compute(&self, ctx: &PatchContext) -> Result<Vec<f64>> {
        Ok(HogDescriptor::histogram(ctx.gray(), ctx.width(), ctx.height()))
    }
}

pub fn hog(img: &Image) -> Result<FeatureVector> {
    HogDescriptor.extract(img)
}
