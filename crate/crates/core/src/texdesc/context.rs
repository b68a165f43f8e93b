use std::any::Any;
use std::cell::{OnceCell, RefCell};
use std::collections::HashMap;
use std::rc::Rc;

use crate::error::{Error, Result};
use crate::imgcore::{quantize8, Image};

const LUMA: [f32; 3] = [0.299, 0.587, 0.114];

/// One patch plus lazily computed intermediates shared by descriptors
/// (channel planes, 8-bit codes, luminance, filter responses).
pub struct PatchContext<'a> {
    img: &'a Image,
    planes: OnceCell<[Vec<f32>; 3]>,
    q8: OnceCell<[Vec<u8>; 3]>,
    gray: OnceCell<Vec<f32>>,
    gray_q8: OnceCell<Vec<u8>>,
    memo: RefCell<HashMap<String, Rc<dyn Any>>>,
}

impl<'a> PatchContext<'a> {
    pub fn new(img: &'a Image) -> Result<Self> {
        if !img.space().is_rgb() {
            return Err(Error::invalid(format!(
                "descriptors need an RGB patch, got {:?}",
                img.space()
            )));
        }
        Ok(PatchContext {
            img,
            planes: OnceCell::new(),
            q8: OnceCell::new(),
            gray: OnceCell::new(),
            gray_q8: OnceCell::new(),
            memo: RefCell::new(HashMap::new()),
        })
    }

    pub fn image(&self) -> &Image {
        self.img
    }

    pub fn width(&self) -> usize {
        self.img.width()
    }

    pub fn height(&self) -> usize {
        self.img.height()
    }

    /// Stored R, G, B samples as separate planes.
    pub fn planes(&self) -> &[Vec<f32>; 3] {
        self.planes.get_or_init(|| [0, 1, 2].map(|c| self.img.plane(c)))
    }

    /// 8-bit codes `round(v * 255)` of each channel.
    pub fn q8(&self) -> &[Vec<u8>; 3] {
        self.q8
            .get_or_init(|| self.planes().clone().map(|p| p.iter().map(|v| quantize8(*v)).collect()))
    }

    /// Luminance `0.299R + 0.587G + 0.114B` of the stored samples.
    pub fn gray(&self) -> &[f32] {
        self.gray.get_or_init(|| {
            self.img
                .data()
                .chunks_exact(3)
                .map(|p| (LUMA[0] * p[0] + LUMA[1] * p[1] + LUMA[2] * p[2]).clamp(0.0, 1.0))
                .collect()
        })
    }

    pub fn gray_q8(&self) -> &[u8] {
        self.gray_q8
            .get_or_init(|| self.gray().iter().map(|v| quantize8(*v)).collect())
    }

    /// Computes a value once per patch under `key`.
    pub(crate) fn memo<T: 'static>(&self, key: &str, f: impl FnOnce() -> T) -> Rc<T> {
        if let Some(v) = self.memo.borrow().get(key) {
            return v.clone().downcast::<T>().expect("memo key reused with another type");
        }
        let v = Rc::new(f());
        self.memo.borrow_mut().insert(key.to_string(), v.clone());
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imgcore::{to_grayscale, ColorSpace};

    #[test]
    fn gray_matches_conversion() {
        let img = Image::from_fn(5, 4, ColorSpace::Srgb8, |x, y| {
            [x as f32 / 5.0, y as f32 / 4.0, 0.3]
        })
        .unwrap();
        let ctx = PatchContext::new(&img).unwrap();
        assert_eq!(ctx.gray(), to_grayscale(&img).unwrap().data());
    }

    #[test]
    fn memo_computes_once() {
        let img = Image::filled(2, 2, ColorSpace::Srgb8, &[0.1, 0.2, 0.3]).unwrap();
        let ctx = PatchContext::new(&img).unwrap();
        let mut calls = 0;
        let a = ctx.memo("k", || {
            calls += 1;
            7u32
        });
        let b = ctx.memo("k", || 8u32);
        assert_eq!((*a, *b, calls), (7, 7, 1));
    }

    #[test]
    fn rejects_gray_patch() {
        let img = Image::filled(2, 2, ColorSpace::Gray, &[0.5]).unwrap();
        assert!(PatchContext::new(&img).is_err());
    }
}
