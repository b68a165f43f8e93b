/// Half-sample symmetric index: `-1 -> 0`, `n -> n - 1`.
#[inline]
pub fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let mut m = i.rem_euclid(period);
    if m >= n {
        m = period - 1 - m;
    }
    m as usize
}

/// Correlates each row with `kx` and each column with `ky` (kernels centered,
/// odd length), reflecting at the borders.
pub fn convolve_separable(plane: &[f64], w: usize, h: usize, kx: &[f64], ky: &[f64]) -> Vec<f64> {
    debug_assert_eq!(plane.len(), w * h);
    let rx = (kx.len() / 2) as isize;
    let ry = (ky.len() / 2) as isize;
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        let row = &plane[y * w..(y + 1) * w];
        for x in 0..w {
            let mut acc = 0.0;
            for (k, kv) in kx.iter().enumerate() {
                acc += kv * row[reflect(x as isize + k as isize - rx, w)];
            }
            tmp[y * w + x] = acc;
        }
    }
    let mut out = vec![0.0; w * h];
    for (k, kv) in ky.iter().enumerate() {
        for y in 0..h {
            let sy = reflect(y as isize + k as isize - ry, h);
            let src = &tmp[sy * w..(sy + 1) * w];
            let dst = &mut out[y * w..(y + 1) * w];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += kv * s;
            }
        }
    }
    out
}

/// Correlation kernels for Gaussian smoothing (order 0) and first or second
/// Gaussian derivatives, truncated at 3 sigma. The order-0 kernel sums to one.
pub fn gaussian_kernel(sigma: f64, order: u8) -> Vec<f64> {
    let r = (3.0 * sigma).ceil().max(1.0) as isize;
    let g: Vec<f64> = (-r..=r).map(|x| (-(x * x) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let sum: f64 = g.iter().sum();
    let s2 = sigma * sigma;
    (-r..=r)
        .zip(&g)
        .map(|(x, gv)| {
            let x = x as f64;
            let gn = gv / sum;
            match order {
                0 => gn,
                1 => x / s2 * gn,
                _ => (x * x / (s2 * s2) - 1.0 / s2) * gn,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reflect_indices() {
        assert_eq!(reflect(-1, 5), 0);
        assert_eq!(reflect(-2, 5), 1);
        assert_eq!(reflect(5, 5), 4);
        assert_eq!(reflect(6, 5), 3);
        assert_eq!(reflect(2, 5), 2);
    }

    #[test]
    fn identity_kernel() {
        let p: Vec<f64> = (0..12).map(|v| v as f64).collect();
        assert_eq!(convolve_separable(&p, 4, 3, &[1.0], &[0.0, 1.0, 0.0]), p);
    }

    #[test]
    fn derivative_of_ramp() {
        let (w, h) = (40, 30);
        let p: Vec<f64> = (0..w * h).map(|i| (i % w) as f64 * 0.5).collect();
        let k = gaussian_kernel(2.0, 1);
        let g = gaussian_kernel(2.0, 0);
        let d = convolve_separable(&p, w, h, &k, &g);
        let mid = d[15 * w + 20];
        assert!((mid - 0.5).abs() < 0.02, "{mid}");
        assert!((g.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
