use std::path::Path;

use image::{DynamicImage, GrayImage, RgbImage};

use super::image::{quantize8, ColorSpace, Image};
use crate::error::{Error, Result};

/// Reads an 8-bit PNG; byte `v` becomes `v / 255`. RGB(A) maps to sRGB,
/// luma to gray. Alpha is dropped.
pub fn read_png(path: impl AsRef<Path>) -> Result<Image> {
    let dynimg = image::open(path.as_ref())?;
    let (w, h) = (dynimg.width() as usize, dynimg.height() as usize);
    match dynimg {
        DynamicImage::ImageLuma8(g) => {
            let data = g.into_raw().into_iter().map(|v| v as f32 / 255.0).collect();
            Image::new(w, h, ColorSpace::Gray, data)
        }
        DynamicImage::ImageLumaA8(_) => {
            let g = dynimg.to_luma8();
            let data = g.into_raw().into_iter().map(|v| v as f32 / 255.0).collect();
            Image::new(w, h, ColorSpace::Gray, data)
        }
        DynamicImage::ImageRgb8(_) | DynamicImage::ImageRgba8(_) => {
            let rgb = dynimg.to_rgb8();
            let data = rgb.into_raw().into_iter().map(|v| v as f32 / 255.0).collect();
            Image::new(w, h, ColorSpace::Srgb8, data)
        }
        other => Err(Error::Dataset {
            path: path.as_ref().to_path_buf(),
            message: format!("unsupported pixel format {:?}", other.color()),
        }),
    }
}

/// Writes an sRGB or gray image as an 8-bit PNG.
pub fn write_png(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    let bytes: Vec<u8> = img.data().iter().map(|v| quantize8(*v)).collect();
    let (w, h) = (img.width() as u32, img.height() as u32);
    match img.space() {
        ColorSpace::Srgb8 => RgbImage::from_raw(w, h, bytes)
            .expect("length checked at construction")
            .save(path.as_ref())?,
        ColorSpace::Gray => GrayImage::from_raw(w, h, bytes)
            .expect("length checked at construction")
            .save(path.as_ref())?,
        other => {
            return Err(Error::invalid(format!("cannot write {other:?} as 8-bit PNG")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let img = Image::from_fn(5, 3, ColorSpace::Srgb8, |x, y| {
            [x as f32 * 51.0 / 255.0, y as f32 * 100.0 / 255.0, 7.0 / 255.0]
        })
        .unwrap();
        let path = dir.path().join("a.png");
        write_png(&img, &path).unwrap();
        assert_eq!(read_png(&path).unwrap(), img);

        let gray = Image::filled(4, 4, ColorSpace::Gray, &[128.0 / 255.0]).unwrap();
        let path = dir.path().join("g.png");
        write_png(&gray, &path).unwrap();
        assert_eq!(read_png(&path).unwrap(), gray);
    }

    #[test]
    fn linear_images_are_not_written() {
        let dir = tempfile::tempdir().unwrap();
        let img = Image::filled(2, 2, ColorSpace::LinearRgb, &[0.1, 0.2, 0.3]).unwrap();
        assert!(write_png(&img, dir.path().join("x.png")).is_err());
    }
}
