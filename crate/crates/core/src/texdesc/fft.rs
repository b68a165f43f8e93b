use std::sync::Arc;

use rustfft::num_complex::Complex32;
use rustfft::{Fft, FftPlanner};

/// Unnormalized 2-D FFT on row-major complex buffers.
pub(crate) struct Fft2 {
    w: usize,
    h: usize,
    row_fwd: Arc<dyn Fft<f32>>,
    row_inv: Arc<dyn Fft<f32>>,
    col_fwd: Arc<dyn Fft<f32>>,
    col_inv: Arc<dyn Fft<f32>>,
}

impl Fft2 {
    pub fn new(w: usize, h: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 {
            w,
            h,
            row_fwd: planner.plan_fft_forward(w),
            row_inv: planner.plan_fft_inverse(w),
            col_fwd: planner.plan_fft_forward(h),
            col_inv: planner.plan_fft_inverse(h),
        }
    }

    pub fn size(&self) -> (usize, usize) {
        (self.w, self.h)
    }

    fn run(&self, data: &mut [Complex32], rows: &dyn Fft<f32>, cols: &dyn Fft<f32>, scratch: &mut Vec<Complex32>) {
        let (w, h) = (self.w, self.h);
        let extra = rows.get_inplace_scratch_len().max(cols.get_inplace_scratch_len());
        scratch.resize(w * h + extra, Complex32::default());
        let (tmp, fft_scratch) = scratch.split_at_mut(w * h);
        rows.process_with_scratch(data, fft_scratch);
        transpose(data, tmp, w, h);
        cols.process_with_scratch(tmp, fft_scratch);
        transpose(tmp, data, h, w);
    }

    pub fn forward(&self, data: &mut [Complex32], scratch: &mut Vec<Complex32>) {
        self.run(data, &*self.row_fwd, &*self.col_fwd, scratch);
    }

    /// Inverse transform without the `1 / (w h)` factor.
    #[cfg(test)]
    pub fn inverse_unscaled(&self, data: &mut [Complex32], scratch: &mut Vec<Complex32>) {
        self.run(data, &*self.row_inv, &*self.col_inv, scratch);
    }

    fn fft_scratch(&self, scratch: &mut Vec<Complex32>) {
        let n = self.row_inv.get_inplace_scratch_len().max(self.col_inv.get_inplace_scratch_len());
        scratch.resize(n, Complex32::default());
    }

    /// Unscaled inverse of a spectrum that is zero outside `rows`, given
    /// as those rows back to back in `band`. The result is column-major.
    pub fn inverse_row_band(
        &self,
        band: &mut [Complex32],
        rows: &[usize],
        out: &mut Vec<Complex32>,
        scratch: &mut Vec<Complex32>,
    ) {
        let (w, h) = (self.w, self.h);
        self.fft_scratch(scratch);
        if !band.is_empty() {
            self.row_inv.process_with_scratch(band, scratch);
        }
        out.clear();
        out.resize(w * h, Complex32::default());
        for (line, &y) in band.chunks_exact(w).zip(rows) {
            for (x, v) in line.iter().enumerate() {
                out[x * h + y] = *v;
            }
        }
        self.col_inv.process_with_scratch(out, scratch);
    }

    /// As [`Fft2::inverse_row_band`] for a spectrum given by its nonzero
    /// columns. The result is row-major.
    pub fn inverse_col_band(
        &self,
        band: &mut [Complex32],
        cols: &[usize],
        out: &mut Vec<Complex32>,
        scratch: &mut Vec<Complex32>,
    ) {
        let (w, h) = (self.w, self.h);
        self.fft_scratch(scratch);
        if !band.is_empty() {
            self.col_inv.process_with_scratch(band, scratch);
        }
        out.clear();
        out.resize(w * h, Complex32::default());
        for (line, &x) in band.chunks_exact(h).zip(cols) {
            for (y, v) in line.iter().enumerate() {
                out[y * w + x] = *v;
            }
        }
        self.row_inv.process_with_scratch(out, scratch);
    }

    /// Inverse transform scaled by `1 / (w h)`.
    #[cfg(test)]
    pub fn inverse(&self, data: &mut [Complex32], scratch: &mut Vec<Complex32>) {
        self.inverse_unscaled(data, scratch);
        let s = 1.0 / (self.w * self.h) as f32;
        for v in data.iter_mut() {
            *v *= s;
        }
    }

    /// Spectrum of a real plane.
    pub fn spectrum(&self, plane: &[f32]) -> Vec<Complex32> {
        let mut data: Vec<Complex32> = plane.iter().map(|v| Complex32::new(*v, 0.0)).collect();
        let mut scratch = Vec::new();
        self.forward(&mut data, &mut scratch);
        data
    }
}

/// Copies the `w x h` row-major `src` into `dst` as `h x w`.
pub(crate) fn transpose(src: &[Complex32], dst: &mut [Complex32], w: usize, h: usize) {
    const B: usize = 16;
    for by in (0..h).step_by(B) {
        for bx in (0..w).step_by(B) {
            for y in by..(by + B).min(h) {
                for x in bx..(bx + B).min(w) {
                    dst[x * h + y] = src[y * w + x];
                }
            }
        }
    }
}

/// Signed frequency (cycles per sample) of DFT index `k` of an `n`-point transform.
pub(crate) fn freq(k: usize, n: usize) -> f64 {
    if 2 * k < n {
        k as f64 / n as f64
    } else {
        k as f64 / n as f64 - 1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let (w, h) = (12, 10);
        let plane: Vec<f32> = (0..w * h).map(|i| ((i * 7) % 13) as f32 / 13.0).collect();
        let f = Fft2::new(w, h);
        let mut spec = f.spectrum(&plane);
        assert!((spec[0].re - plane.iter().sum::<f32>()).abs() < 1e-4);
        let mut scratch = Vec::new();
        f.inverse(&mut spec, &mut scratch);
        for (a, b) in spec.iter().zip(&plane) {
            assert!((a.re - b).abs() < 1e-5 && a.im.abs() < 1e-5);
        }
    }

    #[test]
    fn band_inverses_match_full() {
        let (w, h) = (12, 10);
        let f = Fft2::new(w, h);
        let (mut out, mut scratch) = (Vec::new(), Vec::new());
        let value = |x: usize, y: usize| Complex32::new((x * 3 + y) as f32, x as f32 - y as f32);
        let rows = [1usize, 2, 9];
        let cols = [0usize, 4, 5];
        let mut spec = vec![Complex32::default(); w * h];
        for &y in &rows {
            for &x in &cols {
                spec[y * w + x] = value(x, y);
            }
        }
        let mut full = spec.clone();
        f.inverse_unscaled(&mut full, &mut scratch);

        let mut band: Vec<Complex32> = rows.iter().flat_map(|&y| spec[y * w..(y + 1) * w].to_vec()).collect();
        f.inverse_row_band(&mut band, &rows, &mut out, &mut scratch);
        for y in 0..h {
            for x in 0..w {
                assert!((out[x * h + y] - full[y * w + x]).norm() < 1e-3);
            }
        }
        let mut band: Vec<Complex32> = cols.iter().flat_map(|&x| (0..h).map(move |y| (x, y))).map(|(x, y)| spec[y * w + x]).collect();
        f.inverse_col_band(&mut band, &cols, &mut out, &mut scratch);
        for (a, b) in out.iter().zip(&full) {
            assert!((a - b).norm() < 1e-3);
        }
    }

    #[test]
    fn signed_frequencies() {
        assert_eq!(freq(0, 8), 0.0);
        assert_eq!(freq(3, 8), 0.375);
        assert_eq!(freq(4, 8), -0.5);
        assert_eq!(freq(7, 8), -0.125);
    }
}

