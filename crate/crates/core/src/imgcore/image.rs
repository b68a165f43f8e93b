use crate::error::{Error, Result};

/// Color space tag carried by every [`Image`].
///
/// `Srgb8`, `LinearRgb` and `Gray` hold samples in `[0, 1]`; the remaining
/// spaces hold their native ranges (see [`super::convert`]).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ColorSpace {
    Srgb8,
    LinearRgb,
    Gray,
    Hsv,
    Lab,
    Ohta,
    ChromaticityRgb,
}

impl ColorSpace {
    pub fn channels(self) -> usize {
        match self {
            ColorSpace::Gray => 1,
            _ => 3,
        }
    }

    /// Spaces whose samples are bounded to the unit interval.
    pub fn is_unit_range(self) -> bool {
        matches!(
            self,
            ColorSpace::Srgb8 | ColorSpace::LinearRgb | ColorSpace::Gray
        )
    }

    pub fn is_rgb(self) -> bool {
        matches!(self, ColorSpace::Srgb8 | ColorSpace::LinearRgb)
    }
}

/// Row-major, channel-interleaved raster of `f32` samples.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    space: ColorSpace,
    data: Vec<f32>,
}

impl Image {
    pub fn new(width: usize, height: usize, space: ColorSpace, data: Vec<f32>) -> Result<Self> {
        let expected = width * height * space.channels();
        if data.len() != expected {
            return Err(Error::DimMismatch {
                expected,
                actual: data.len(),
            });
        }
        if space.is_unit_range() {
            if let Some(v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::invalid(format!(
                    "{space:?} sample {v} outside [0, 1]"
                )));
            }
        } else if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite sample"));
        }
        Ok(Image {
            width,
            height,
            space,
            data,
        })
    }

    /// Builds an image without range validation. Callers guarantee the
    /// invariants (used on hot paths that clamp by construction).
    pub(crate) fn from_raw(width: usize, height: usize, space: ColorSpace, data: Vec<f32>) -> Self {
        debug_assert_eq!(data.len(), width * height * space.channels());
        Image {
            width,
            height,
            space,
            data,
        }
    }

    pub fn filled(width: usize, height: usize, space: ColorSpace, value: &[f32]) -> Result<Self> {
        if value.len() != space.channels() {
            return Err(Error::DimMismatch {
                expected: space.channels(),
                actual: value.len(),
            });
        }
        let data = value
            .iter()
            .copied()
            .cycle()
            .take(width * height * value.len())
            .collect();
        Image::new(width, height, space, data)
    }

    /// Builds an image from a per-pixel closure returning all channels.
    pub fn from_fn<F>(width: usize, height: usize, space: ColorSpace, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, usize) -> [f32; 3],
    {
        let ch = space.channels();
        let mut data = Vec::with_capacity(width * height * ch);
        for y in 0..height {
            for x in 0..width {
                let px = f(x, y);
                data.extend_from_slice(&px[..ch]);
            }
        }
        Image::new(width, height, space, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.space.channels()
    }

    pub fn space(&self) -> ColorSpace {
        self.space
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> &[f32] {
        let ch = self.channels();
        let i = (y * self.width + x) * ch;
        &self.data[i..i + ch]
    }

    /// Copies out one channel as a `width * height` plane.
    pub fn plane(&self, channel: usize) -> Vec<f32> {
        let ch = self.channels();
        self.data.iter().skip(channel).step_by(ch).copied().collect()
    }

    /// Reassembles an image from equally sized planes.
    pub fn from_planes(width: usize, height: usize, space: ColorSpace, planes: &[Vec<f32>]) -> Result<Self> {
        if planes.len() != space.channels() {
            return Err(Error::DimMismatch {
                expected: space.channels(),
                actual: planes.len(),
            });
        }
        let n = width * height;
        let mut data = vec![0.0; n * planes.len()];
        for (c, p) in planes.iter().enumerate() {
            if p.len() != n {
                return Err(Error::DimMismatch {
                    expected: n,
                    actual: p.len(),
                });
            }
            for (i, v) in p.iter().enumerate() {
                data[i * planes.len() + c] = *v;
            }
        }
        Image::new(width, height, space, data)
    }

    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<Self> {
        if x0 + w > self.width || y0 + h > self.height {
            return Err(Error::invalid(format!(
                "crop {w}x{h}+{x0}+{y0} exceeds {}x{}",
                self.width, self.height
            )));
        }
        let ch = self.channels();
        let mut data = Vec::with_capacity(w * h * ch);
        for y in y0..y0 + h {
            let start = (y * self.width + x0) * ch;
            data.extend_from_slice(&self.data[start..start + w * ch]);
        }
        Ok(Image::from_raw(w, h, self.space, data))
    }

    /// Applies `f` to every sample, clamping into `[0, 1]` for unit-range spaces.
    pub fn map(&self, mut f: impl FnMut(f32) -> f32) -> Self {
        let unit = self.space.is_unit_range();
        let data = self
            .data
            .iter()
            .map(|v| {
                let r = f(*v);
                if unit {
                    r.clamp(0.0, 1.0)
                } else {
                    r
                }
            })
            .collect();
        Image::from_raw(self.width, self.height, self.space, data)
    }

    pub(crate) fn with_space(mut self, space: ColorSpace) -> Self {
        debug_assert_eq!(space.channels(), self.space.channels());
        self.space = space;
        self
    }
}

/// Re-quantizes a unit-range sample to its 8-bit code.
#[inline]
pub fn quantize8(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// sRGB (IEC 61966-2-1) decoding of an encoded sample.
#[inline]
pub fn srgb_to_linear(v: f64) -> f64 {
    if v <= 0.04045 {
        v / 12.92
    } else {
        ((v + 0.055) / 1.055).powf(2.4)
    }
}

#[inline]
pub fn linear_to_srgb(v: f64) -> f64 {
    if v <= 0.003_130_8 {
        v * 12.92
    } else {
        1.055 * v.powf(1.0 / 2.4) - 0.055
    }
}

/// Returns a linear-RGB view of an RGB image (decoding sRGB when needed).
pub fn to_linear(img: &Image) -> Result<Image> {
    match img.space() {
        ColorSpace::LinearRgb => Ok(img.clone()),
        ColorSpace::Srgb8 => Ok(img
            .map(|v| srgb_to_linear(v as f64) as f32)
            .with_space(ColorSpace::LinearRgb)),
        other => Err(Error::invalid(format!("expected an RGB image, got {other:?}"))),
    }
}

/// Encodes a linear-RGB image back to sRGB (no 8-bit rounding).
pub fn to_srgb(img: &Image) -> Result<Image> {
    match img.space() {
        ColorSpace::Srgb8 => Ok(img.clone()),
        ColorSpace::LinearRgb => Ok(img
            .map(|v| linear_to_srgb(v as f64) as f32)
            .with_space(ColorSpace::Srgb8)),
        other => Err(Error::invalid(format!("expected an RGB image, got {other:?}"))),
    }
}

/// Converts `img` from linear RGB back into `space` (sRGB or linear).
pub(crate) fn restore_encoding(img: Image, space: ColorSpace) -> Result<Image> {
    match space {
        ColorSpace::Srgb8 => to_srgb(&img),
        _ => Ok(img),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_wrong_length() {
        assert!(Image::new(2, 2, ColorSpace::Srgb8, vec![0.0; 11]).is_err());
        assert!(Image::new(2, 2, ColorSpace::Gray, vec![0.0; 4]).is_ok());
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(Image::new(1, 1, ColorSpace::Gray, vec![1.5]).is_err());
        assert!(Image::new(1, 1, ColorSpace::Lab, vec![50.0, -20.0, 10.0]).is_ok());
    }

    #[test]
    fn planes_round_trip() {
        let img = Image::from_fn(3, 2, ColorSpace::Srgb8, |x, y| {
            [x as f32 / 4.0, y as f32 / 4.0, 0.5]
        })
        .unwrap();
        let planes: Vec<_> = (0..3).map(|c| img.plane(c)).collect();
        let back = Image::from_planes(3, 2, ColorSpace::Srgb8, &planes).unwrap();
        assert_eq!(img, back);
    }

    #[test]
    fn srgb_transfer_inverts() {
        for i in 0..=255 {
            let v = i as f64 / 255.0;
            assert!((linear_to_srgb(srgb_to_linear(v)) - v).abs() < 1e-12);
        }
    }

    #[test]
    fn quantize_rounds() {
        assert_eq!(quantize8(10.0 / 255.0), 10);
        assert_eq!(quantize8(1.0), 255);
        assert_eq!(quantize8(0.0), 0);
    }
}
