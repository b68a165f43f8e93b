//! Color-normalization preprocessors. All of them work on linear RGB and
//! return an image in the input's encoding.

mod constancy;
mod retinex;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgcore::{linear_triple, restore_encoding, ColorSpace, Image};

pub use constancy::{
    angular_error_deg, gray_edge, gray_world, weighted_gray_edge, GrayEdgeParams,
    WeightedGrayEdgeParams,
};
pub use retinex::{retinex_frankle_mccann, retinex_mccann99};

/// Estimated illuminant color, positive and L2-normalized.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IlluminantEstimate {
    pub rgb: [f64; 3],
}

impl IlluminantEstimate {
    pub fn from_rgb(rgb: [f64; 3]) -> Result<Self> {
        if rgb.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::invalid(format!("illuminant estimate {rgb:?} is not positive")));
        }
        let n = rgb.iter().map(|v| v * v).sum::<f64>().sqrt();
        Ok(IlluminantEstimate { rgb: rgb.map(|v| v / n) })
    }

    pub fn neutral() -> Self {
        IlluminantEstimate::from_rgb([1.0; 3]).expect("positive")
    }
}

/// Output of an illuminant-estimating normalizer.
#[derive(Clone, Debug, PartialEq)]
pub struct Normalized {
    pub image: Image,
    pub estimate: IlluminantEstimate,
    /// The estimate fell back to neutral and the image was left unchanged.
    pub fallback: bool,
}

pub(crate) fn linear_planes(img: &Image) -> Result<[Vec<f64>; 3]> {
    let space = img.space();
    if !space.is_rgb() {
        return Err(Error::invalid(format!("normalization needs an RGB image, got {space:?}")));
    }
    let n = img.width() * img.height();
    let mut planes = [Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n)];
    for p in img.data().chunks_exact(3) {
        let t = linear_triple(space, p);
        for c in 0..3 {
            planes[c].push(t[c]);
        }
    }
    Ok(planes)
}

pub(crate) fn from_linear_planes(like: &Image, planes: &[Vec<f64>; 3]) -> Result<Image> {
    let data = (0..planes[0].len())
        .flat_map(|i| [0, 1, 2].map(|c| planes[c][i].clamp(0.0, 1.0) as f32))
        .collect();
    let linear = Image::new(like.width(), like.height(), ColorSpace::LinearRgb, data)?;
    restore_encoding(linear, like.space())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Normalizer {
    None,
    GrayWorld,
    GrayEdge,
    WeightedGrayEdge,
    RetinexFrankle,
    RetinexMcCann99,
}

impl Normalizer {
    pub const ALL: [Normalizer; 6] = [
        Normalizer::None,
        Normalizer::GrayWorld,
        Normalizer::GrayEdge,
        Normalizer::WeightedGrayEdge,
        Normalizer::RetinexFrankle,
        Normalizer::RetinexMcCann99,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Normalizer::None => "none",
            Normalizer::GrayWorld => "gray-world",
            Normalizer::GrayEdge => "gray-edge",
            Normalizer::WeightedGrayEdge => "weighted-gray-edge",
            Normalizer::RetinexFrankle => "retinex-frankle",
            Normalizer::RetinexMcCann99 => "retinex-mccann99",
        }
    }
}

impl fmt::Display for Normalizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Normalizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Normalizer::ALL
            .into_iter()
            .find(|n| n.name() == s)
            .ok_or_else(|| Error::Unknown {
                kind: "normalizer",
                name: s.to_string(),
            })
    }
}

/// Where normalization is applied.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizeScope {
    /// Whole 800x800 image before tiling.
    Image,
    /// Each 200x200 patch independently.
    Patch,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NormalizeParams {
    pub scope: NormalizeScope,
    pub gray_edge: GrayEdgeParams,
    pub weighted_gray_edge: WeightedGrayEdgeParams,
    pub retinex_iterations: usize,
    pub mccann99_iterations: usize,
    /// Pixel count bound of the coarsest McCann99 pyramid level.
    pub mccann99_coarsest: usize,
}

impl Default for NormalizeParams {
    fn default() -> Self {
        NormalizeParams {
            scope: NormalizeScope::Image,
            gray_edge: GrayEdgeParams::default(),
            weighted_gray_edge: WeightedGrayEdgeParams::default(),
            retinex_iterations: 4,
            mccann99_iterations: 4,
            mccann99_coarsest: 32,
        }
    }
}

/// Applies the named normalizer with its configured parameters.
pub fn normalize(img: &Image, normalizer: Normalizer, params: &NormalizeParams) -> Result<Image> {
    Ok(match normalizer {
        Normalizer::None => img.clone(),
        Normalizer::GrayWorld => gray_world(img)?.image,
        Normalizer::GrayEdge => gray_edge(img, &params.gray_edge)?.image,
        Normalizer::WeightedGrayEdge => weighted_gray_edge(img, &params.weighted_gray_edge)?.image,
        Normalizer::RetinexFrankle => retinex_frankle_mccann(img, params.retinex_iterations)?,
        Normalizer::RetinexMcCann99 => {
            retinex_mccann99(img, params.mccann99_iterations, params.mccann99_coarsest)?
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for n in Normalizer::ALL {
            assert_eq!(n.name().parse::<Normalizer>().unwrap(), n);
        }
        assert!(matches!("bogus".parse::<Normalizer>(), Err(Error::Unknown { .. })));
    }

    #[test]
    fn keeps_encoding() {
        let img = Image::from_fn(16, 16, ColorSpace::Srgb8, |x, y| {
            [x as f32 / 20.0 + 0.1, y as f32 / 20.0 + 0.1, 0.5]
        })
        .unwrap();
        for n in Normalizer::ALL {
            let out = normalize(&img, n, &NormalizeParams::default()).unwrap();
            assert_eq!(out.space(), ColorSpace::Srgb8, "{n}");
            assert_eq!((out.width(), out.height()), (16, 16));
        }
    }

    #[test]
    fn rejects_gray_input() {
        let img = Image::filled(4, 4, ColorSpace::Gray, &[0.5]).unwrap();
        assert!(normalize(&img, Normalizer::GrayWorld, &NormalizeParams::default()).is_err());
    }
}
