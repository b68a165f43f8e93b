use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::kmeans::{kmeans, KmeansParams};
use crate::error::{Error, Result};

pub const VARIANCE_FLOOR: f64 = 1e-6;
const MIN_WEIGHT: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GmmParams {
    pub max_iterations: usize,
    /// Stop once the mean log-likelihood improves by less than this.
    pub tolerance: f64,
    pub variance_floor: f64,
    pub init: KmeansParams,
}

impl Default for GmmParams {
    fn default() -> Self {
        GmmParams {
            max_iterations: 100,
            tolerance: 1e-5,
            variance_floor: VARIANCE_FLOOR,
            init: KmeansParams::default(),
        }
    }
}

/// Diagonal-covariance Gaussian mixture, row-major per component.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianMixture {
    pub dim: usize,
    pub weights: Vec<f64>,
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
    pub training_fingerprint: String,
}

impl GaussianMixture {
    pub fn new(dim: usize, weights: Vec<f64>, means: Vec<f64>, variances: Vec<f64>, fingerprint: impl Into<String>) -> Result<Self> {
        let k = weights.len();
        if dim == 0 || k == 0 || means.len() != k * dim || variances.len() != k * dim {
            return Err(Error::invalid("mixture parameter shapes disagree"));
        }
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|w| !(*w >= 0.0)) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("mixture weights must be nonnegative and sum to 1, got {total}")));
        }
        if variances.iter().any(|v| !(*v >= VARIANCE_FLOOR)) {
            return Err(Error::invalid("mixture variance below the floor"));
        }
        Ok(GaussianMixture {
            dim,
            weights,
            means,
            variances,
            training_fingerprint: fingerprint.into(),
        })
    }

    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn mean(&self, j: usize) -> &[f64] {
        &self.means[j * self.dim..(j + 1) * self.dim]
    }

    pub fn variance(&self, j: usize) -> &[f64] {
        &self.variances[j * self.dim..(j + 1) * self.dim]
    }

    /// Component posteriors of `x` written to `out`; returns `ln p(x)`.
    pub fn posteriors(&self, x: &[f32], out: &mut [f64]) -> f64 {
        Scorer::new(self).posteriors(x, out)
    }
}

/// A mixture with its per-component constants precomputed.
pub(crate) struct Scorer<'a> {
    gmm: &'a GaussianMixture,
    /// `ln w_j - (d ln 2pi + ln det_j) / 2`.
    offsets: Vec<f64>,
    inv_var: Vec<f64>,
}

impl<'a> Scorer<'a> {
    pub(crate) fn new(gmm: &'a GaussianMixture) -> Self {
        let norm = gmm.dim as f64 * (2.0 * PI).ln();
        let offsets = (0..gmm.k())
            .map(|j| gmm.weights[j].ln() - 0.5 * (norm + gmm.variance(j).iter().map(|v| v.ln()).sum::<f64>()))
            .collect();
        Scorer {
            gmm,
            offsets,
            inv_var: gmm.variances.iter().map(|v| 1.0 / v).collect(),
        }
    }

    pub(crate) fn posteriors(&self, x: &[f32], out: &mut [f64]) -> f64 {
        let dim = self.gmm.dim;
        for (j, o) in out.iter_mut().enumerate() {
            let (m, iv) = (self.gmm.mean(j), &self.inv_var[j * dim..(j + 1) * dim]);
            let mut q = 0.0;
            for ((xi, mi), vi) in x.iter().zip(m).zip(iv) {
                let d = *xi as f64 - mi;
                q += d * d * vi;
            }
            *o = self.offsets[j] - 0.5 * q;
        }
        let top = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let s: f64 = out.iter().map(|l| (l - top).exp()).sum();
        let lse = top + s.ln();
        out.iter_mut().for_each(|l| *l = (*l - lse).exp());
        lse
    }
}

/// Diagonal EM from a k-means start. Returns the mixture and the mean
/// log-likelihood of the data before each M-step.
pub fn gmm_em_traced(points: &[f32], dim: usize, k: usize, seed: u64, params: &GmmParams) -> Result<(GaussianMixture, Vec<f64>)> {
    if dim == 0 || points.len() % dim != 0 {
        return Err(Error::invalid(format!("{} values are not rows of dimension {dim}", points.len())));
    }
    let n = points.len() / dim;
    if n < 10 * k {
        return Err(Error::NotEnoughData(format!("{n} points for a {k}-component mixture (need {})", 10 * k)));
    }
    let floor = params.variance_floor.max(VARIANCE_FLOOR);
    let cb = kmeans(points, dim, k, seed, &params.init)?;
    let rows = || points.chunks_exact(dim);

    let mut global_mean = vec![0.0; dim];
    for p in rows() {
        global_mean.iter_mut().zip(p).for_each(|(g, v)| *g += *v as f64 / n as f64);
    }
    let mut global_var = vec![0.0; dim];
    for p in rows() {
        global_var.iter_mut().zip(p).zip(&global_mean).for_each(|((g, v), m)| *g += (*v as f64 - m).powi(2) / n as f64);
    }
    global_var.iter_mut().for_each(|v| *v = v.max(floor));

    // Hard k-means partition gives the starting moments.
    let mut resp = vec![0.0; n * k];
    for (i, p) in rows().enumerate() {
        resp[i * k + cb.nearest(p)] = 1.0;
    }
    let mut gmm = GaussianMixture {
        dim,
        weights: vec![1.0 / k as f64; k],
        means: cb.words.iter().map(|v| *v as f64).collect(),
        variances: vec![1.0; k * dim],
        training_fingerprint: format!("gmm:k={k}:seed={seed}"),
    };
    let mut reseeded = false;
    let mut trace = Vec::new();
    for it in 0..=params.max_iterations {
        if it > 0 {
            let scorer = Scorer::new(&gmm);
            let mut ll = 0.0;
            for (i, p) in rows().enumerate() {
                ll += scorer.posteriors(p, &mut resp[i * k..(i + 1) * k]);
            }
            let ll = ll / n as f64;
            trace.push(ll);
            if let [.., prev, last] = trace[..] {
                if (last - prev).abs() < params.tolerance * prev.abs().max(1.0) {
                    break;
                }
            }
            if it == params.max_iterations {
                break;
            }
        }
        m_step(&mut gmm, points, &resp, floor);
        if let Some(j) = (0..k).find(|j| gmm.weights[*j] < MIN_WEIGHT) {
            if reseeded {
                return Err(Error::Training(format!("mixture component {j} collapsed twice")));
            }
            reseeded = true;
            reseed(&mut gmm, j, points, &global_var);
        }
    }
    Ok((gmm, trace))
}

pub fn gmm_em(points: &[f32], dim: usize, k: usize, seed: u64, params: &GmmParams) -> Result<GaussianMixture> {
    gmm_em_traced(points, dim, k, seed, params).map(|r| r.0)
}

fn m_step(gmm: &mut GaussianMixture, points: &[f32], resp: &[f64], floor: f64) {
    let (dim, k) = (gmm.dim, gmm.k());
    let n = points.len() / dim;
    let mut mass = vec![0.0; k];
    let mut s1 = vec![0.0; k * dim];
    let mut s2 = vec![0.0; k * dim];
    for (i, p) in points.chunks_exact(dim).enumerate() {
        for j in 0..k {
            let r = resp[i * k + j];
            if r == 0.0 {
                continue;
            }
            mass[j] += r;
            for ((a, b), v) in s1[j * dim..(j + 1) * dim].iter_mut().zip(&mut s2[j * dim..(j + 1) * dim]).zip(p) {
                let v = *v as f64;
                *a += r * v;
                *b += r * v * v;
            }
        }
    }
    for j in 0..k {
        gmm.weights[j] = mass[j] / n as f64;
        if mass[j] <= 0.0 {
            continue;
        }
        for d in 0..dim {
            let m = s1[j * dim + d] / mass[j];
            gmm.means[j * dim + d] = m;
            gmm.variances[j * dim + d] = (s2[j * dim + d] / mass[j] - m * m).max(floor);
        }
    }
    let total: f64 = gmm.weights.iter().sum();
    gmm.weights.iter_mut().for_each(|w| *w /= total);
}

/// Moves component `j` onto the worst-explained point.
fn reseed(gmm: &mut GaussianMixture, j: usize, points: &[f32], global_var: &[f64]) {
    let (dim, k) = (gmm.dim, gmm.k());
    let mut tmp = vec![0.0; k];
    let mut worst = (0, f64::INFINITY);
    let scorer = Scorer::new(gmm);
    for (i, p) in points.chunks_exact(dim).enumerate() {
        let ll = scorer.posteriors(p, &mut tmp);
        if ll < worst.1 {
            worst = (i, ll);
        }
    }
    let p = &points[worst.0 * dim..(worst.0 + 1) * dim];
    gmm.means[j * dim..(j + 1) * dim].iter_mut().zip(p).for_each(|(m, v)| *m = *v as f64);
    gmm.variances[j * dim..(j + 1) * dim].copy_from_slice(global_var);
    gmm.weights[j] = 1.0 / k as f64;
    let total: f64 = gmm.weights.iter().sum();
    gmm.weights.iter_mut().for_each(|w| *w /= total);
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Box-Muller standard normal.
    fn normal(rng: &mut impl Rng) -> f64 {
        let (u, v): (f64, f64) = (rng.gen_range(f64::EPSILON..1.0), rng.gen());
        (-2.0 * u.ln()).sqrt() * (2.0 * PI * v).cos()
    }

    fn blobs(centers: &[[f64; 2]], per: usize, spread: f64, seed: u64) -> Vec<f32> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::new();
        for c in centers {
            for _ in 0..per {
                out.push((c[0] + spread * normal(&mut rng)) as f32);
                out.push((c[1] + spread * normal(&mut rng)) as f32);
            }
        }
        out
    }

    #[test]
    fn recovers_two_blobs() {
        let centers = [[-3.0, 1.0], [4.0, -2.0]];
        let pts = blobs(&centers, 400, 0.5, 9);
        let (g, trace) = gmm_em_traced(&pts, 2, 2, 1, &GmmParams::default()).unwrap();
        assert!((g.weights.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        for c in centers {
            let hit = (0..2).any(|j| g.mean(j).iter().zip(c).all(|(m, t)| (m - t).abs() < 0.1));
            assert!(hit, "{c:?} not found in {:?}", g.means);
        }
        for pair in trace.windows(2) {
            assert!(pair[1] >= pair[0] - 1e-9, "{trace:?}");
        }
        assert!(g.variances.iter().all(|v| *v >= VARIANCE_FLOOR));
    }

    #[test]
    fn needs_ten_points_per_component() {
        let pts = blobs(&[[0.0, 0.0]], 19, 1.0, 2);
        assert!(matches!(gmm_em(&pts, 2, 2, 0, &GmmParams::default()), Err(Error::NotEnoughData(_))));
    }

    #[test]
    fn posteriors_sum_to_one() {
        let g = GaussianMixture::new(1, vec![0.25, 0.75], vec![0.0, 1.0], vec![1.0, 2.0], "t").unwrap();
        let mut p = [0.0; 2];
        let ll = g.posteriors(&[0.3], &mut p);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let dens = |x: f64, m: f64, v: f64| (-(x - m) * (x - m) / (2.0 * v)).exp() / (2.0 * PI * v).sqrt();
        let x = 0.3f32 as f64;
        let want = (0.25 * dens(x, 0.0, 1.0) + 0.75 * dens(x, 1.0, 2.0)).ln();
        assert!((ll - want).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_weights() {
        assert!(GaussianMixture::new(1, vec![0.5, 0.6], vec![0.0, 1.0], vec![1.0, 1.0], "t").is_err());
    }
}
