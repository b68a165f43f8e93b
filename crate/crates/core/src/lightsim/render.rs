use serde::{Deserialize, Serialize};

use super::condition::LightCondition;
use super::illuminant::IlluminantTable;
use crate::error::{Error, Result};
use crate::imgcore::{linear_to_srgb, ColorSpace, Image, IMAGE_SIDE};

/// How rendered images are stored.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Encoding {
    /// sRGB-encoded, rounded to 8-bit codes (what a PNG holds).
    Srgb8,
    /// Linear radiance on a 2^-16 fixed-point grid, exposure applied after
    /// quantization so the intensity levels scale samples exactly.
    Linear16,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderParams {
    pub encoding: Encoding,
    /// Width of the linear blend between the two halves of a
    /// multi-illuminant shot (pixels).
    pub blend_band_px: usize,
    /// Irradiance of band-lit shots relative to fully lit monitors.
    pub band_irradiance: f64,
    pub illuminants: IlluminantTable,
}

impl Default for RenderParams {
    fn default() -> Self {
        RenderParams {
            encoding: Encoding::Srgb8,
            blend_band_px: 64,
            band_irradiance: 0.8,
            illuminants: IlluminantTable::default(),
        }
    }
}

fn require_linear(img: &Image) -> Result<()> {
    if img.space() != ColorSpace::LinearRgb {
        return Err(Error::invalid(format!("expected linear RGB, got {:?}", img.space())));
    }
    Ok(())
}

/// Channel-wise product with an illuminant color, clipped to [0, 1].
pub fn apply_illuminant(img: &Image, illum: [f64; 3]) -> Result<Image> {
    require_linear(img)?;
    let data = img
        .data()
        .chunks_exact(3)
        .flat_map(|p| {
            [0, 1, 2].map(|c| ((p[c] as f64) * illum[c]).clamp(0.0, 1.0) as f32)
        })
        .collect();
    Ok(Image::from_raw(img.width(), img.height(), ColorSpace::LinearRgb, data))
}

/// Scales linear samples by the irradiance fraction `f` in (0, 1].
pub fn apply_intensity(img: &Image, f: f64) -> Result<Image> {
    require_linear(img)?;
    if !(f > 0.0 && f <= 1.0) {
        return Err(Error::Domain(format!("intensity fraction {f} outside (0, 1]")));
    }
    Ok(img.map(|v| ((v as f64) * f) as f32))
}

/// Shading slope for light at `theta` degrees; zero for light from above.
pub fn shading_slope(theta: f64) -> f64 {
    0.6 * (90.0 - theta) / 66.0
}

/// Multiplicative shading at row `y` of an image `height` rows tall.
pub fn shading_factor(theta: f64, y: f64, height: f64) -> f64 {
    (1.0 + shading_slope(theta) * (0.5 - y / height)).clamp(0.0, 2.0)
}

/// Vertical shading ramp simulating oblique light, applied in linear RGB.
pub fn apply_direction(img: &Image, theta: f64) -> Result<Image> {
    require_linear(img)?;
    let (w, h) = (img.width(), img.height());
    let mut data = img.data().to_vec();
    for y in 0..h {
        let s = shading_factor(theta, y as f64, h as f64);
        for v in &mut data[y * w * 3..(y + 1) * w * 3] {
            *v = ((*v as f64) * s).clamp(0.0, 1.0) as f32;
        }
    }
    Ok(Image::from_raw(w, h, ColorSpace::LinearRgb, data))
}

/// Weight of the right-hand illuminant at column `x`.
fn blend_weight(x: usize, width: usize, band: usize) -> f64 {
    if band == 0 {
        return if 2 * x >= width { 1.0 } else { 0.0 };
    }
    let start = width as f64 / 2.0 - band as f64 / 2.0;
    ((x as f64 + 0.5 - start) / band as f64).clamp(0.0, 1.0)
}

const FIXED16: f64 = 65536.0;

/// Renders an albedo texture under one lighting condition.
///
/// Applies the illuminant color (two-sided blend for multi-illuminant
/// shots), the direction shading and the intensity, then stores the result
/// according to `params.encoding`.
pub fn render_condition(tex: &Image, cond: &LightCondition, params: &RenderParams) -> Result<Image> {
    require_linear(tex)?;
    if tex.width() != IMAGE_SIDE || tex.height() != IMAGE_SIDE {
        return Err(Error::invalid(format!(
            "albedo must be {IMAGE_SIDE}x{IMAGE_SIDE}, got {}x{}",
            tex.width(),
            tex.height()
        )));
    }
    let (w, h) = (tex.width(), tex.height());
    let left = params.illuminants.rgb(cond.illuminant)?;
    let right = match cond.pair {
        Some((a, b)) => {
            debug_assert_eq!(a, cond.illuminant);
            params.illuminants.rgb(b)?
        }
        None => left,
    };
    let column_illum: Vec<[f64; 3]> = (0..w)
        .map(|x| {
            let t = if cond.pair.is_some() {
                blend_weight(x, w, params.blend_band_px)
            } else {
                0.0
            };
            [0, 1, 2].map(|c| (1.0 - t) * left[c] + t * right[c])
        })
        .collect();
    if !(cond.intensity > 0.0 && cond.intensity <= 1.0) {
        return Err(Error::Domain(format!(
            "intensity fraction {} outside (0, 1]",
            cond.intensity
        )));
    }
    let exposure = cond.intensity * if cond.band_lit { params.band_irradiance } else { 1.0 };
    let theta = cond.theta as f64;
    let src = tex.data();
    let mut out = Vec::with_capacity(src.len());
    for y in 0..h {
        let s = shading_factor(theta, y as f64, h as f64);
        for x in 0..w {
            let il = &column_illum[x];
            let i = (y * w + x) * 3;
            for c in 0..3 {
                let lit = ((src[i + c] as f64) * il[c]).clamp(0.0, 1.0);
                let shaded = (lit * s).clamp(0.0, 1.0);
                let v = match params.encoding {
                    Encoding::Srgb8 => {
                        let e = linear_to_srgb(shaded * exposure);
                        ((e * 255.0).round() / 255.0) as f32
                    }
                    Encoding::Linear16 => {
                        let q = (shaded * FIXED16).round() / FIXED16;
                        (q * exposure) as f32
                    }
                };
                out.push(v);
            }
        }
    }
    let space = match params.encoding {
        Encoding::Srgb8 => ColorSpace::Srgb8,
        Encoding::Linear16 => ColorSpace::LinearRgb,
    };
    Ok(Image::from_raw(w, h, space, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imgcore::{quantize8, to_srgb};
    use crate::lightsim::condition::{condition_catalog, find_condition};

    fn ramp(w: usize, h: usize) -> Image {
        Image::from_fn(w, h, ColorSpace::LinearRgb, |x, y| {
            let v = ((x * 3 + y * 5) % 97) as f32 / 100.0 + 0.01;
            [v, 0.5 * v, 0.9 * v]
        })
        .unwrap()
    }

    #[test]
    fn neutral_illuminant_is_identity() {
        let img = ramp(8, 8);
        assert_eq!(apply_illuminant(&img, [1.0; 3]).unwrap(), img);
    }

    #[test]
    fn illuminant_product() {
        let img = Image::filled(2, 2, ColorSpace::LinearRgb, &[0.5, 0.5, 0.5]).unwrap();
        let out = apply_illuminant(&img, [1.0, 0.5, 0.25]).unwrap();
        assert_eq!(out.pixel(1, 1), &[0.5, 0.25, 0.125]);
    }

    #[test]
    fn blue_primary_zeroes_red_green() {
        let out = apply_illuminant(&ramp(6, 6), [0.0, 0.0, 1.0]).unwrap();
        for p in out.data().chunks(3) {
            assert_eq!((p[0], p[1]), (0.0, 0.0));
        }
    }

    #[test]
    fn intensity_scaling() {
        let img = ramp(5, 5);
        assert_eq!(apply_intensity(&img, 1.0).unwrap(), img);
        let half = apply_intensity(&img, 0.5).unwrap();
        for (a, b) in half.data().iter().zip(img.data()) {
            assert_eq!(*a, b * 0.5);
        }
        assert!(matches!(apply_intensity(&img, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn overhead_light_has_no_shading() {
        let img = ramp(7, 9);
        assert_eq!(apply_direction(&img, 90.0).unwrap(), img);
    }

    #[test]
    fn grazing_light_ramp_ratio() {
        let top = shading_factor(24.0, 0.0, 800.0);
        let bottom = shading_factor(24.0, 800.0, 800.0);
        assert!((top - 1.3).abs() < 1e-12 && (bottom - 0.7).abs() < 1e-12);
        assert!((top / bottom - 1.857).abs() < 1e-3);
    }

    #[test]
    fn shading_monotone_in_y() {
        let img = Image::filled(4, 50, ColorSpace::LinearRgb, &[0.5, 0.5, 0.5]).unwrap();
        let out = apply_direction(&img, 30.0).unwrap();
        for y in 1..50 {
            assert!(out.pixel(0, y)[0] <= out.pixel(0, y - 1)[0]);
        }
    }

    fn albedo() -> Image {
        Image::from_fn(IMAGE_SIDE, IMAGE_SIDE, ColorSpace::LinearRgb, |x, y| {
            let v = (((x / 7) ^ (y / 5)) % 13) as f32 / 16.0 + 0.1;
            [v, 0.8 * v, 0.6 * v + 0.05]
        })
        .unwrap()
    }

    #[test]
    fn reference_condition_is_plain_encoding() {
        let tex = albedo();
        let out = render_condition(&tex, &find_condition("I100").unwrap(), &RenderParams::default()).unwrap();
        let expected = to_srgb(&tex).unwrap();
        for (a, b) in out.data().iter().zip(expected.data()) {
            assert_eq!(quantize8(*a), quantize8(*b));
        }
    }

    #[test]
    fn multi_illuminant_halves_differ() {
        let tex = Image::filled(IMAGE_SIDE, IMAGE_SIDE, ColorSpace::LinearRgb, &[0.5, 0.5, 0.5]).unwrap();
        for cond in condition_catalog().iter().filter(|c| c.pair.is_some()) {
            let out = render_condition(&tex, cond, &RenderParams::default()).unwrap();
            let l = out.pixel(10, 400).to_vec();
            let r = out.pixel(790, 400).to_vec();
            assert_ne!(l, r, "{}", cond.id);
            // Blend band is centered
            assert_eq!(out.pixel(300, 10), out.pixel(10, 10));
            assert_eq!(out.pixel(500, 10), out.pixel(790, 10));
        }
    }

    #[test]
    fn catalog_renders_distinct_images() {
        let tex = albedo();
        let params = RenderParams::default();
        let imgs: Vec<Vec<u8>> = condition_catalog()
            .iter()
            .map(|c| {
                render_condition(&tex, c, &params)
                    .unwrap()
                    .data()
                    .iter()
                    .map(|v| quantize8(*v))
                    .collect()
            })
            .collect();
        for i in 0..imgs.len() {
            for j in 0..i {
                assert_ne!(imgs[i], imgs[j], "conditions {i} and {j} render identically");
            }
        }
    }

    #[test]
    fn rendering_is_deterministic() {
        let tex = albedo();
        let cond = find_condition("MD65L27").unwrap();
        let p = RenderParams::default();
        assert_eq!(render_condition(&tex, &cond, &p).unwrap(), render_condition(&tex, &cond, &p).unwrap());
    }

    #[test]
    fn linear16_intensity_is_exact() {
        let tex = albedo();
        let params = RenderParams {
            encoding: Encoding::Linear16,
            ..RenderParams::default()
        };
        let full = render_condition(&tex, &find_condition("I100").unwrap(), &params).unwrap();
        for (id, f) in [("I75", 0.75f32), ("I50", 0.5), ("I25", 0.25)] {
            let img = render_condition(&tex, &find_condition(id).unwrap(), &params).unwrap();
            for (a, b) in img.data().iter().zip(full.data()) {
                assert_eq!(*a, b * f);
            }
        }
    }
}
