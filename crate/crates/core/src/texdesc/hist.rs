use super::{normalize_hist, Descriptor, FeatureVector, PatchContext};
use crate::error::Result;
use crate::imgcore::{linear_triple, mat3_mul, quantize8, rgb_chromaticity, rgb_to_hsv, Image, D65_XY, RGB_TO_XYZ};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HistVariant {
    /// Luminance.
    Gray,
    /// Hue and value.
    Hv,
    /// R, G and B marginals.
    Rgb,
    /// rgb chromaticity marginals.
    Chromaticity,
}

impl HistVariant {
    pub fn dim(self) -> usize {
        match self {
            HistVariant::Gray => 256,
            HistVariant::Hv => 512,
            HistVariant::Rgb | HistVariant::Chromaticity => 768,
        }
    }

    fn name(self) -> &'static str {
        match self {
            HistVariant::Gray => "hist-l",
            HistVariant::Hv => "hist-hv",
            HistVariant::Rgb => "hist-rgb",
            HistVariant::Chromaticity => "hist-chrom-rgb",
        }
    }
}

/// Concatenated 256-bin marginal histograms, each summing to one.
pub struct HistDescriptor {
    variant: HistVariant,
}

impl HistDescriptor {
    pub fn new(variant: HistVariant) -> Self {
        HistDescriptor { variant }
    }
}

fn marginals(codes: &[Vec<u8>]) -> Vec<f64> {
    let mut out = Vec::with_capacity(256 * codes.len());
    for ch in codes {
        let mut h = [0.0f64; 256];
        for &b in ch {
            h[b as usize] += 1.0;
        }
        normalize_hist(&mut h);
        out.extend_from_slice(&h);
    }
    out
}

fn code(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

impl Descriptor for HistDescriptor {
    fn name(&self) -> &str {
        self.variant.name()
    }

    fn dim(&self) -> usize {
        self.variant.dim()
    }

    fn compute(&self, ctx: &PatchContext) -> Result<Vec<f64>> {
        let data = ctx.image().data();
        Ok(match self.variant {
            HistVariant::Gray => marginals(&[ctx.gray_q8().to_vec()]),
            HistVariant::Rgb => marginals(ctx.q8()),
            HistVariant::Hv => {
                let (mut h, mut v) = (Vec::new(), Vec::new());
                for p in data.chunks_exact(3) {
                    let hsv = rgb_to_hsv(p[0], p[1], p[2]);
                    h.push(quantize8(hsv[0]));
                    v.push(quantize8(hsv[2]));
                }
                marginals(&[h, v])
            }
            HistVariant::Chromaticity => {
                let mut codes = [Vec::new(), Vec::new(), Vec::new()];
                for p in data.chunks_exact(3) {
                    let c = rgb_chromaticity(p[0] as f64, p[1] as f64, p[2] as f64);
                    for k in 0..3 {
                        codes[k].push(code(c[k]));
                    }
                }
                marginals(&codes)
            }
        })
    }
}

pub fn hist(img: &Image, variant: HistVariant) -> Result<FeatureVector> {
    HistDescriptor::new(variant).extract(img)
}

/// CIE xy of a linear-RGB triple; black maps to the white point.
pub(crate) fn xy_of(rgb: [f64; 3]) -> (f64, f64) {
    let xyz = mat3_mul(&RGB_TO_XYZ, rgb);
    let s = xyz[0] + xyz[1] + xyz[2];
    if s <= 0.0 {
        D65_XY
    } else {
        (xyz[0] / s, xyz[1] / s)
    }
}

/// Moments of the per-pixel CIE-xy distribution.
pub struct ChromMomentsDescriptor;

impl Descriptor for ChromMomentsDescriptor {
    fn name(&self) -> &str {
        "chrom-moments"
    }

    fn dim(&self) -> usize {
        10
    }

    fn compute(&self, ctx: &PatchContext) -> Result<Vec<f64>> {
        let img = ctx.image();
        let space = img.space();
        let mut m = [0.0f64; 10];
        let mut n = 0.0;
        for p in img.data().chunks_exact(3) {
            let (x, y) = xy_of(linear_triple(space, p));
            let (x2, y2) = (x * x, y * y);
            let terms = [1.0, x, y, x2, x * y, y2, x2 * x, x2 * y, x * y2, y2 * y];
            for k in 0..10 {
                m[k] += terms[k];
            }
            n += 1.0;
        }
        Ok(m.iter().map(|v| v / n).collect())
    }
}

pub fn chromaticity_moments(img: &Image) -> Result<FeatureVector> {
    ChromMomentsDescriptor.extract(img)
}
