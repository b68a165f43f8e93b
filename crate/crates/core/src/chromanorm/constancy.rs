use serde::{Deserialize, Serialize};

use super::{from_linear_planes, linear_planes, IlluminantEstimate, Normalized};
use crate::error::{Error, Result};
use crate::imgcore::{convolve_separable, gaussian_kernel, Image};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GrayEdgeParams {
    /// Derivative order: 0 (Shades-of-Gray), 1 or 2.
    pub order: u8,
    /// Minkowski norm.
    pub p: f64,
    /// Gaussian scale in pixels; 0 uses plain central differences.
    pub sigma: f64,
}

impl Default for GrayEdgeParams {
    fn default() -> Self {
        GrayEdgeParams {
            order: 1,
            p: 1.0,
            sigma: 6.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WeightedGrayEdgeParams {
    pub edge: GrayEdgeParams,
    pub iterations: usize,
    /// Exponent of the specular-edge weight; 0 disables weighting.
    pub kappa: f64,
    /// Convergence threshold on the per-iteration correction (degrees).
    pub tolerance_deg: f64,
}

impl Default for WeightedGrayEdgeParams {
    fn default() -> Self {
        WeightedGrayEdgeParams {
            edge: GrayEdgeParams::default(),
            iterations: 10,
            kappa: 10.0,
            tolerance_deg: 1e-3,
        }
    }
}

/// Divides each channel by its estimate component and rescales the global
/// maximum to one.
fn von_kries(planes: &[Vec<f64>; 3], e: &IlluminantEstimate) -> [Vec<f64>; 3] {
    let mut out = [0, 1, 2].map(|c| planes[c].iter().map(|v| v / e.rgb[c]).collect::<Vec<f64>>());
    let max = out.iter().flatten().cloned().fold(0.0, f64::max);
    if max > 0.0 {
        for p in &mut out {
            for v in p.iter_mut() {
                *v /= max;
            }
        }
    }
    out
}

fn minkowski(values: &[f64], weights: Option<&[f64]>, p: f64) -> f64 {
    let (mut sum, mut norm) = (0.0, 0.0);
    for (i, v) in values.iter().enumerate() {
        let w = weights.map_or(1.0, |w| w[i]);
        sum += w * if p == 1.0 { v.abs() } else { v.abs().powf(p) };
        norm += w;
    }
    if norm <= 0.0 {
        return 0.0;
    }
    let m = sum / norm;
    if p == 1.0 {
        m
    } else {
        m.powf(1.0 / p)
    }
}

fn finish(img: &Image, planes: &[Vec<f64>; 3], e: IlluminantEstimate) -> Result<Normalized> {
    let out = von_kries(planes, &e);
    Ok(Normalized {
        image: from_linear_planes(img, &out)?,
        estimate: e,
        fallback: false,
    })
}

fn fallback(img: &Image) -> Normalized {
    Normalized {
        image: img.clone(),
        estimate: IlluminantEstimate::neutral(),
        fallback: true,
    }
}

/// Gray-World: the illuminant is proportional to the channel means.
pub fn gray_world(img: &Image) -> Result<Normalized> {
    let planes = linear_planes(img)?;
    let means = [0, 1, 2].map(|c| minkowski(&planes[c], None, 1.0));
    if let Some(channel) = (0..3).find(|c| means[*c] <= 0.0) {
        return Err(Error::DegenerateChannel { channel });
    }
    finish(img, &planes, IlluminantEstimate::from_rgb(means)?)
}

/// Per-channel edge magnitude maps of the requested derivative order.
fn edge_magnitudes(planes: &[Vec<f64>; 3], w: usize, h: usize, order: u8, sigma: f64) -> [Vec<f64>; 3] {
    planes.clone().map(|p| {
        let (dx, dy, dxx, dyy, dxy): (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>);
        if sigma > 0.0 {
            let g0 = gaussian_kernel(sigma, 0);
            let g1 = gaussian_kernel(sigma, 1);
            if order == 1 {
                dx = convolve_separable(&p, w, h, &g1, &g0);
                dy = convolve_separable(&p, w, h, &g0, &g1);
                return dx.iter().zip(&dy).map(|(a, b)| (a * a + b * b).sqrt()).collect();
            }
            let g2 = gaussian_kernel(sigma, 2);
            dxx = convolve_separable(&p, w, h, &g2, &g0);
            dyy = convolve_separable(&p, w, h, &g0, &g2);
            dxy = convolve_separable(&p, w, h, &g1, &g1);
        } else {
            let d1 = [-0.5, 0.0, 0.5];
            if order == 1 {
                dx = convolve_separable(&p, w, h, &d1, &[1.0]);
                dy = convolve_separable(&p, w, h, &[1.0], &d1);
                return dx.iter().zip(&dy).map(|(a, b)| (a * a + b * b).sqrt()).collect();
            }
            let d2 = [1.0, -2.0, 1.0];
            dxx = convolve_separable(&p, w, h, &d2, &[1.0]);
            dyy = convolve_separable(&p, w, h, &[1.0], &d2);
            dxy = convolve_separable(&p, w, h, &d1, &d1);
        }
        (0..p.len())
            .map(|i| (dxx[i] * dxx[i] + dyy[i] * dyy[i] + 4.0 * dxy[i] * dxy[i]).sqrt())
            .collect()
    })
}

/// Per-channel maps whose Minkowski means form the estimate.
fn edge_maps(planes: &[Vec<f64>; 3], w: usize, h: usize, params: &GrayEdgeParams) -> [Vec<f64>; 3] {
    if params.order == 0 {
        if params.sigma > 0.0 {
            let g = gaussian_kernel(params.sigma, 0);
            return planes.clone().map(|p| convolve_separable(&p, w, h, &g, &g));
        }
        return planes.clone();
    }
    edge_magnitudes(planes, w, h, params.order, params.sigma)
}

fn check_params(params: &GrayEdgeParams) -> Result<()> {
    if !(params.p >= 1.0) {
        return Err(Error::invalid(format!("Minkowski norm {} < 1", params.p)));
    }
    if !(params.sigma >= 0.0) {
        return Err(Error::invalid(format!("sigma {} < 0", params.sigma)));
    }
    if params.order > 2 {
        return Err(Error::invalid(format!("derivative order {} > 2", params.order)));
    }
    Ok(())
}

fn estimate_from_maps(maps: &[Vec<f64>; 3], weights: Option<&[f64]>, p: f64) -> Option<[f64; 3]> {
    let e = [0, 1, 2].map(|c| minkowski(&maps[c], weights, p));
    if e.iter().all(|v| *v > 1e-12) {
        Some(e)
    } else {
        None
    }
}

/// Gray-Edge framework e(n, p, sigma). A channel without derivative energy
/// makes the estimate fall back to neutral and leaves the image unchanged.
pub fn gray_edge(img: &Image, params: &GrayEdgeParams) -> Result<Normalized> {
    check_params(params)?;
    let planes = linear_planes(img)?;
    let maps = edge_maps(&planes, img.width(), img.height(), params);
    match estimate_from_maps(&maps, None, params.p) {
        Some(e) => finish(img, &planes, IlluminantEstimate::from_rgb(e)?),
        None => Ok(fallback(img)),
    }
}

fn angle_deg(a: [f64; 3], b: [f64; 3]) -> f64 {
    let dot: f64 = (0..3).map(|i| a[i] * b[i]).sum();
    let na: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    (dot / (na * nb)).clamp(-1.0, 1.0).acos().to_degrees()
}

/// Specular-edge weights: how well the local derivative color aligns with
/// the (already corrected) white direction, raised to `kappa`.
fn specular_weights(planes: &[Vec<f64>; 3], w: usize, h: usize, sigma: f64, kappa: f64) -> Vec<f64> {
    let n = planes[0].len();
    if kappa == 0.0 {
        return vec![1.0; n];
    }
    let (k0, k1) = if sigma > 0.0 {
        (gaussian_kernel(sigma, 0), gaussian_kernel(sigma, 1))
    } else {
        (vec![1.0], vec![-0.5, 0.0, 0.5])
    };
    let dx = planes.clone().map(|p| convolve_separable(&p, w, h, &k1, &k0));
    let dy = planes.clone().map(|p| convolve_separable(&p, w, h, &k0, &k1));
    let inv3 = 1.0 / 3f64.sqrt();
    (0..n)
        .map(|i| {
            let px = (dx[0][i] + dx[1][i] + dx[2][i]) * inv3;
            let py = (dy[0][i] + dy[1][i] + dy[2][i]) * inv3;
            let norm2: f64 = (0..3).map(|c| dx[c][i] * dx[c][i] + dy[c][i] * dy[c][i]).sum();
            if norm2 <= 0.0 {
                0.0
            } else {
                ((px * px + py * py) / norm2).sqrt().min(1.0).powf(kappa)
            }
        })
        .collect()
}

/// Iterative weighted Gray-Edge: each round corrects the image with the
/// running estimate, re-weights edges by specularity and refines.
pub fn weighted_gray_edge(img: &Image, params: &WeightedGrayEdgeParams) -> Result<Normalized> {
    check_params(&params.edge)?;
    if params.iterations == 0 {
        return Err(Error::invalid("weighted Gray-Edge needs at least one iteration"));
    }
    let planes = linear_planes(img)?;
    let (w, h) = (img.width(), img.height());
    let mut total = [1.0f64; 3];
    let mut current = planes.clone();
    for it in 0..params.iterations {
        let weights = specular_weights(&current, w, h, params.edge.sigma, params.kappa);
        let maps = edge_maps(&current, w, h, &params.edge);
        let step = match estimate_from_maps(&maps, Some(&weights), params.edge.p) {
            Some(e) => e,
            None if it == 0 => return Ok(fallback(img)),
            None => break,
        };
        if it > 0 && angle_deg(step, [1.0; 3]) < params.tolerance_deg {
            break;
        }
        for c in 0..3 {
            total[c] *= step[c];
            for v in current[c].iter_mut() {
                *v /= step[c];
            }
        }
    }
    finish(img, &planes, IlluminantEstimate::from_rgb(total)?)
}

/// Angle between an estimate and a reference illuminant color (degrees).
pub fn angular_error_deg(a: &IlluminantEstimate, b: [f64; 3]) -> f64 {
    angle_deg(a.rgb, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imgcore::ColorSpace;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(seed: u64, w: usize, h: usize) -> Image {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Image::from_fn(w, h, ColorSpace::LinearRgb, |_, _| {
            [rng.gen_range(0.05..0.9), rng.gen_range(0.05..0.9), rng.gen_range(0.05..0.9)]
        })
        .unwrap()
    }

    fn cast(img: &Image, k: [f32; 3]) -> Image {
        let data = img.data().chunks(3).flat_map(|p| [p[0] * k[0], p[1] * k[1], p[2] * k[2]]).collect();
        Image::new(img.width(), img.height(), img.space(), data).unwrap()
    }

    fn max_rel(a: &Image, b: &Image) -> f64 {
        a.data()
            .iter()
            .zip(b.data())
            .map(|(x, y)| ((x - y).abs() / y.abs().max(1e-3)) as f64)
            .fold(0.0, f64::max)
    }

    #[test]
    fn constant_image_becomes_achromatic() {
        let img = Image::filled(6, 6, ColorSpace::LinearRgb, &[0.8, 0.4, 0.2]).unwrap();
        let out = gray_world(&img).unwrap();
        for p in out.image.data().chunks(3) {
            assert!((p[0] - p[1]).abs() < 1e-6 && (p[1] - p[2]).abs() < 1e-6);
        }
        let e = out.estimate.rgb;
        assert!((e.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn balanced_image_only_rescales() {
        let img = Image::new(2, 1, ColorSpace::LinearRgb, vec![0.2, 0.4, 0.3, 0.4, 0.2, 0.3]).unwrap();
        let out = gray_world(&img).unwrap().image;
        let s = out.data()[0] / img.data()[0];
        for (a, b) in out.data().iter().zip(img.data()) {
            assert!((a - s * b).abs() < 1e-6);
        }
    }

    #[test]
    fn gray_world_cancels_cast() {
        let img = random_image(3, 32, 32);
        let a = gray_world(&img).unwrap().image;
        let b = gray_world(&cast(&img, [1.0, 0.5, 0.25])).unwrap().image;
        assert!(max_rel(&b, &a) < 1e-6);
    }

    #[test]
    fn zero_channel_is_degenerate() {
        let img = Image::filled(3, 3, ColorSpace::LinearRgb, &[0.5, 0.0, 0.5]).unwrap();
        assert!(matches!(gray_world(&img), Err(Error::DegenerateChannel { channel: 1 })));
    }

    #[test]
    fn gray_world_is_idempotent() {
        let img = random_image(4, 24, 24);
        let once = gray_world(&img).unwrap().image;
        let twice = gray_world(&once).unwrap().image;
        assert!(max_rel(&twice, &once) < 1e-6);
    }

    #[test]
    fn gray_edge_constant_falls_back() {
        let img = Image::filled(16, 16, ColorSpace::LinearRgb, &[0.3, 0.6, 0.2]).unwrap();
        let out = gray_edge(&img, &GrayEdgeParams::default()).unwrap();
        assert!(out.fallback);
        assert_eq!(out.image, img);
        assert_eq!(out.estimate, IlluminantEstimate::neutral());
    }

    #[test]
    fn gray_edge_cancels_cast() {
        let img = random_image(5, 40, 40);
        for order in [1, 2] {
            let params = GrayEdgeParams { order, p: 2.0, sigma: 1.5 };
            let a = gray_edge(&img, &params).unwrap().image;
            let b = gray_edge(&cast(&img, [0.4, 1.0, 0.7]), &params).unwrap().image;
            assert!(max_rel(&b, &a) < 1e-6, "order {order}");
        }
    }

    #[test]
    fn order_zero_matches_gray_world() {
        let params = GrayEdgeParams { order: 0, p: 1.0, sigma: 0.0 };
        for seed in 0..10 {
            let img = random_image(100 + seed, 12, 9);
            let a = gray_edge(&img, &params).unwrap();
            let b = gray_world(&img).unwrap();
            assert_eq!(a.image, b.image);
            assert_eq!(a.estimate, b.estimate);
        }
    }

    #[test]
    fn bad_params_rejected() {
        let img = random_image(1, 8, 8);
        assert!(gray_edge(&img, &GrayEdgeParams { order: 1, p: 0.5, sigma: 1.0 }).is_err());
        assert!(gray_edge(&img, &GrayEdgeParams { order: 1, p: 1.0, sigma: -1.0 }).is_err());
    }

    #[test]
    fn unweighted_matches_gray_edge() {
        let img = random_image(7, 30, 30);
        let edge = GrayEdgeParams { order: 1, p: 1.0, sigma: 1.0 };
        let params = WeightedGrayEdgeParams { edge: edge.clone(), iterations: 5, kappa: 0.0, ..Default::default() };
        let a = weighted_gray_edge(&img, &params).unwrap();
        let b = gray_edge(&img, &edge).unwrap();
        assert_eq!(a.image, b.image);
        assert_eq!(a.estimate, b.estimate);
    }

    #[test]
    fn weighted_constant_falls_back() {
        let img = Image::filled(10, 10, ColorSpace::LinearRgb, &[0.3, 0.6, 0.2]).unwrap();
        let out = weighted_gray_edge(&img, &WeightedGrayEdgeParams::default()).unwrap();
        assert!(out.fallback);
        assert_eq!(out.image, img);
    }

    // Mondrian of near-gray patches under a known cast.
    #[test]
    fn weighted_recovers_cast() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let cells: Vec<[f32; 3]> = (0..64)
            .map(|_| {
                let g: f32 = rng.gen_range(0.1..0.8);
                [0, 1, 2].map(|_| g * rng.gen_range(0.93..1.07))
            })
            .collect();
        let k = [0.9f32, 0.7, 0.35];
        let img = Image::from_fn(96, 96, ColorSpace::LinearRgb, |x, y| {
            let c = cells[(y / 12) * 8 + x / 12];
            [c[0] * k[0], c[1] * k[1], c[2] * k[2]]
        })
        .unwrap();
        let out = weighted_gray_edge(&img, &WeightedGrayEdgeParams::default()).unwrap();
        let err = angular_error_deg(&out.estimate, k.map(|v| v as f64));
        assert!(err < 2.0, "angular error {err}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn estimate_is_unit_and_positive(seed in 0u64..1000) {
            let img = random_image(seed, 10, 10);
            for out in [gray_world(&img).unwrap(), gray_edge(&img, &GrayEdgeParams { sigma: 1.0, ..Default::default() }).unwrap()] {
                let e = out.estimate.rgb;
                prop_assert!(e.iter().all(|v| *v > 0.0));
                prop_assert!((e.iter().map(|v| v * v).sum::<f64>().sqrt() - 1.0).abs() < 1e-9);
            }
        }
    }
}
