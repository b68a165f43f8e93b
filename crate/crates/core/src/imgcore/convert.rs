use std::sync::OnceLock;

use super::image::{srgb_to_linear, ColorSpace, Image};
use crate::error::{Error, Result};

/// Linear sRGB to CIE XYZ (D65).
pub const RGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.412_456_4, 0.357_576_1, 0.180_437_5],
    [0.212_672_9, 0.715_152_2, 0.072_175_0],
    [0.019_333_9, 0.119_192_0, 0.950_304_1],
];

/// CIE XYZ to linear sRGB (D65).
pub const XYZ_TO_RGB: [[f64; 3]; 3] = [
    [3.240_454_2, -1.537_138_5, -0.498_531_4],
    [-0.969_266_0, 1.876_010_8, 0.041_556_0],
    [0.055_643_4, -0.204_025_9, 1.057_225_2],
];

/// D65 reference white in XYZ with Y = 1.
pub const D65_WHITE: [f64; 3] = [0.950_47, 1.0, 1.088_83];

/// sRGB white point chromaticity.
pub const D65_XY: (f64, f64) = (0.3127, 0.3290);

const LUMA: [f32; 3] = [0.299, 0.587, 0.114];

pub fn mat3_mul(m: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

/// Luminance `L = 0.299R + 0.587G + 0.114B` of an RGB image.
pub fn to_grayscale(img: &Image) -> Result<Image> {
    if !img.space().is_rgb() {
        return Err(Error::invalid(format!(
            "grayscale conversion needs an RGB image, got {:?}",
            img.space()
        )));
    }
    let data = img
        .data()
        .chunks_exact(3)
        .map(|p| (LUMA[0] * p[0] + LUMA[1] * p[1] + LUMA[2] * p[2]).clamp(0.0, 1.0))
        .collect();
    Ok(Image::from_raw(img.width(), img.height(), ColorSpace::Gray, data))
}

/// Linear-RGB triple of a pixel, decoding sRGB when the image is encoded.
#[inline]
pub(crate) fn linear_triple(space: ColorSpace, p: &[f32]) -> [f64; 3] {
    if space == ColorSpace::Srgb8 {
        [decode(p[0]), decode(p[1]), decode(p[2])]
    } else {
        [p[0] as f64, p[1] as f64, p[2] as f64]
    }
}

/// sRGB decode with a table for values on the 8-bit grid.
#[inline]
fn decode(v: f32) -> f64 {
    static TABLE: OnceLock<[f64; 256]> = OnceLock::new();
    let k = (v * 255.0).round();
    if (0.0..=255.0).contains(&k) && k / 255.0 == v {
        TABLE.get_or_init(|| std::array::from_fn(|i| srgb_to_linear((i as f32 / 255.0) as f64)))[k as usize]
    } else {
        srgb_to_linear(v as f64)
    }
}

pub fn rgb_to_hsv(r: f32, g: f32, b: f32) -> [f32; 3] {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let s = if max > 0.0 { delta / max } else { 0.0 };
    let h = if delta <= 0.0 {
        0.0
    } else if max == r {
        ((g - b) / delta).rem_euclid(6.0) / 6.0
    } else if max == g {
        ((b - r) / delta + 2.0) / 6.0
    } else {
        ((r - g) / delta + 4.0) / 6.0
    };
    // rem_euclid can land exactly on 1.0 after rounding
    let h = if h >= 1.0 { h - 1.0 } else { h };
    [h, s, max]
}

fn lab_f(t: f64) -> f64 {
    const D: f64 = 6.0 / 29.0;
    if t > D * D * D {
        t.cbrt()
    } else {
        t / (3.0 * D * D) + 4.0 / 29.0
    }
}

pub fn linear_rgb_to_lab(rgb: [f64; 3]) -> [f64; 3] {
    let xyz = mat3_mul(&RGB_TO_XYZ, rgb);
    let fx = lab_f(xyz[0] / D65_WHITE[0]);
    let fy = lab_f(xyz[1] / D65_WHITE[1]);
    let fz = lab_f(xyz[2] / D65_WHITE[2]);
    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

/// rgb chromaticity; a black pixel maps to the neutral point.
#[inline]
pub fn rgb_chromaticity(r: f64, g: f64, b: f64) -> [f64; 3] {
    let s = r + g + b;
    if s <= 0.0 {
        [1.0 / 3.0; 3]
    } else {
        [r / s, g / s, b / s]
    }
}

/// Converts an RGB image into `target`.
///
/// HSV, Ohta and chromaticity operate on the stored samples; Lab decodes
/// sRGB first and uses the D65 white.
pub fn convert(img: &Image, target: ColorSpace) -> Result<Image> {
    let space = img.space();
    if !space.is_rgb() {
        return Err(Error::invalid(format!("convert needs an RGB image, got {space:?}")));
    }
    let px = img.data().chunks_exact(3);
    let data: Vec<f32> = match target {
        ColorSpace::Hsv => px.flat_map(|p| rgb_to_hsv(p[0], p[1], p[2])).collect(),
        ColorSpace::Lab => px
            .flat_map(|p| linear_rgb_to_lab(linear_triple(space, p)).map(|v| v as f32))
            .collect(),
        ColorSpace::Ohta => px
            .flat_map(|p| {
                let (r, g, b) = (p[0], p[1], p[2]);
                [
                    (r + g + b) / 3.0,
                    (r - b) / 2.0 + 0.5,
                    (2.0 * g - r - b) / 4.0 + 0.5,
                ]
            })
            .collect(),
        ColorSpace::ChromaticityRgb => px
            .flat_map(|p| rgb_chromaticity(p[0] as f64, p[1] as f64, p[2] as f64).map(|v| v as f32))
            .collect(),
        other => {
            return Err(Error::invalid(format!("unsupported conversion target {other:?}")));
        }
    };
    Ok(Image::from_raw(img.width(), img.height(), target, data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn solid(rgb: [f32; 3]) -> Image {
        Image::filled(2, 2, ColorSpace::Srgb8, &rgb).unwrap()
    }

    #[test]
    fn gray_of_white_is_one() {
        let g = to_grayscale(&solid([1.0, 1.0, 1.0])).unwrap();
        assert!(g.data().iter().all(|v| (*v - 1.0).abs() < 1e-6));
    }

    #[test]
    fn gray_of_red() {
        let g = to_grayscale(&solid([1.0, 0.0, 0.0])).unwrap();
        assert!(g.data().iter().all(|v| (*v - 0.299).abs() < 1e-7));
    }

    #[test]
    fn gray_of_primaries() {
        let img = Image::new(
            2,
            2,
            ColorSpace::Srgb8,
            vec![1., 0., 0., 0., 1., 0., 0., 0., 1., 0., 0., 0.],
        )
        .unwrap();
        let g = to_grayscale(&img).unwrap();
        let expected = [0.299, 0.587, 0.114, 0.0];
        for (a, b) in g.data().iter().zip(expected) {
            assert!((a - b).abs() < 1e-7);
        }
    }

    #[test]
    fn gray_rejects_single_channel() {
        let img = Image::filled(2, 2, ColorSpace::Gray, &[0.5]).unwrap();
        assert!(matches!(to_grayscale(&img), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn white_to_lab() {
        let lab = convert(&solid([1.0, 1.0, 1.0]), ColorSpace::Lab).unwrap();
        let p = lab.pixel(0, 0);
        assert!((p[0] - 100.0).abs() < 1e-3);
        assert!(p[1].abs() < 1e-3 && p[2].abs() < 1e-3);
    }

    #[test]
    fn chromaticity_ratio() {
        let c = convert(&solid([60.0 / 255.0, 120.0 / 255.0, 120.0 / 255.0]), ColorSpace::ChromaticityRgb).unwrap();
        let p = c.pixel(1, 1);
        assert!((p[0] - 0.2).abs() < 1e-6 && (p[1] - 0.4).abs() < 1e-6 && (p[2] - 0.4).abs() < 1e-6);
    }

    #[test]
    fn black_chromaticity_is_neutral() {
        let c = convert(&solid([0.0, 0.0, 0.0]), ColorSpace::ChromaticityRgb).unwrap();
        assert!(c.data().iter().all(|v| (*v - 1.0 / 3.0).abs() < 1e-7));
    }

    #[test]
    fn red_to_hsv() {
        let c = convert(&solid([1.0, 0.0, 0.0]), ColorSpace::Hsv).unwrap();
        assert_eq!(c.pixel(0, 0), &[0.0, 1.0, 1.0]);
    }

    #[test]
    fn ohta_offsets() {
        let c = convert(&solid([1.0, 0.0, 0.0]), ColorSpace::Ohta).unwrap();
        let p = c.pixel(0, 0);
        assert!((p[0] - 1.0 / 3.0).abs() < 1e-7);
        assert!((p[1] - 1.0).abs() < 1e-7);
        assert!((p[2] - 0.25).abs() < 1e-7);
    }

    proptest! {
        #[test]
        fn lab_lightness_bounded(r in 0.0f32..=1.0, g in 0.0f32..=1.0, b in 0.0f32..=1.0) {
            let lab = convert(&solid([r, g, b]), ColorSpace::Lab).unwrap();
            let l = lab.pixel(0, 0)[0];
            prop_assert!((-1e-3..=100.0 + 1e-3).contains(&l));
        }

        #[test]
        fn gray_inputs_are_achromatic_in_lab(v in 0.0f32..=1.0) {
            let lab = convert(&solid([v, v, v]), ColorSpace::Lab).unwrap();
            let p = lab.pixel(0, 0);
            prop_assert!(p[1].abs() < 1e-3 && p[2].abs() < 1e-3);
        }

        #[test]
        fn grayscale_is_linear(r in 0.0f32..=1.0, g in 0.0f32..=1.0, b in 0.0f32..=1.0, a in 0.0f32..=1.0) {
            let g1 = to_grayscale(&solid([r, g, b])).unwrap().data()[0];
            let g2 = to_grayscale(&solid([a * r, a * g, a * b])).unwrap().data()[0];
            prop_assert!((g2 - a * g1).abs() <= 1e-6);
        }

        #[test]
        fn chromaticity_sums_to_one(r in 0.0f32..=1.0, g in 0.0f32..=1.0, b in 0.0f32..=1.0) {
            prop_assume!(r + g + b > 0.0);
            let c = convert(&solid([r, g, b]), ColorSpace::ChromaticityRgb).unwrap();
            let p = c.pixel(0, 0);
            prop_assert!(((p[0] + p[1] + p[2]) as f64 - 1.0).abs() < 1e-6);
        }

        #[test]
        fn hue_in_unit_interval(r in 0.0f32..=1.0, g in 0.0f32..=1.0, b in 0.0f32..=1.0) {
            let h = rgb_to_hsv(r, g, b)[0];
            prop_assert!((0.0..1.0).contains(&h));
        }
    }
}
