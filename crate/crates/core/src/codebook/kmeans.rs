use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KmeansParams {
    pub max_iterations: usize,
    /// Stop once the inertia improves by less than this fraction.
    pub tolerance: f64,
}

impl Default for KmeansParams {
    fn default() -> Self {
        KmeansParams {
            max_iterations: 100,
            tolerance: 1e-4,
        }
    }
}

/// Visual words: `k` centroids of dimension `dim`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Codebook {
    pub dim: usize,
    pub words: Vec<f32>,
    /// Identifies the training data and seed.
    pub training_fingerprint: String,
}

impl Codebook {
    pub fn new(dim: usize, words: Vec<f32>, training_fingerprint: impl Into<String>) -> Result<Self> {
        if dim == 0 || words.is_empty() || words.len() % dim != 0 {
            return Err(Error::invalid(format!("{} values do not form words of dimension {dim}", words.len())));
        }
        Ok(Codebook {
            dim,
            words,
            training_fingerprint: training_fingerprint.into(),
        })
    }

    pub fn k(&self) -> usize {
        self.words.len() / self.dim
    }

    pub fn word(&self, j: usize) -> &[f32] {
        &self.words[j * self.dim..(j + 1) * self.dim]
    }

    /// Index of the closest word in squared L2 distance, lowest index on ties.
    pub fn nearest(&self, x: &[f32]) -> usize {
        nearest_row(&self.words, self.dim, x).0
    }
}

pub(crate) fn sq_dist(a: &[f32], b: &[f32]) -> f32 {
    let mut lanes = [0f32; 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let tail: f32 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| (x - y) * (x - y)).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            let d = x[k] - y[k];
            lanes[k] += d * d;
        }
    }
    lanes.iter().sum::<f32>() + tail
}

/// Closest row of `rows` to `x` and its squared distance.
pub(crate) fn nearest_row(rows: &[f32], dim: usize, x: &[f32]) -> (usize, f32) {
    let mut best = (0, f32::INFINITY);
    for (j, c) in rows.chunks_exact(dim).enumerate() {
        let d = sq_dist(c, x);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn distinct_count(points: &[f32], dim: usize, stop_at: usize) -> usize {
    let mut seen = HashSet::new();
    for p in points.chunks_exact(dim) {
        seen.insert(p.iter().map(|v| v.to_bits()).collect::<Vec<u32>>());
        if seen.len() >= stop_at {
            break;
        }
    }
    seen.len()
}

/// k-means++ seeding: the first center uniformly, each next one with
/// probability proportional to the squared distance to the chosen ones.
fn seed_centers(points: &[f32], dim: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<f32> {
    let n = points.len() / dim;
    let row = |i: usize| &points[i * dim..(i + 1) * dim];
    let mut centers = row(rng.gen_range(0..n)).to_vec();
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(row(i), &centers[..dim]) as f64).collect();
    while centers.len() < k * dim {
        let total: f64 = d2.iter().sum();
        let mut target = rng.gen::<f64>() * total;
        let mut pick = None;
        for (i, d) in d2.iter().enumerate() {
            if *d > 0.0 {
                pick = Some(i);
                if target < *d {
                    break;
                }
                target -= d;
            }
        }
        let pick = pick.expect("enough distinct points");
        let c = row(pick).to_vec();
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(row(i), &c) as f64);
        }
        centers.extend(c);
    }
    centers
}

/// Lloyd's k-means from k-means++ seeds. Returns the codebook and the
/// inertia after each assignment step.
pub fn kmeans_traced(
    points: &[f32],
    dim: usize,
    k: usize,
    seed: u64,
    params: &KmeansParams,
) -> Result<(Codebook, Vec<f64>)> {
    if dim == 0 || points.len() % dim != 0 {
        return Err(Error::invalid(format!("{} values are not rows of dimension {dim}", points.len())));
    }
    if k == 0 {
        return Err(Error::invalid("k must be positive"));
    }
    let n = points.len() / dim;
    let distinct = distinct_count(points, dim, k);
    if distinct < k {
        return Err(Error::NotEnoughData(format!("{distinct} distinct points for {k} clusters")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = seed_centers(points, dim, k, &mut rng);
    let mut assign = vec![0usize; n];
    let mut trace = Vec::new();
    for _ in 0..params.max_iterations.max(1) {
        let mut inertia = 0.0;
        for (a, p) in assign.iter_mut().zip(points.chunks_exact(dim)) {
            let (j, d) = nearest_row(&centers, dim, p);
            *a = j;
            inertia += d as f64;
        }
        trace.push(inertia);
        let mut sums = vec![0f64; k * dim];
        let mut counts = vec![0usize; k];
        for (a, p) in assign.iter().zip(points.chunks_exact(dim)) {
            counts[*a] += 1;
            for (s, v) in sums[a * dim..(a + 1) * dim].iter_mut().zip(p) {
                *s += *v as f64;
            }
        }
        for j in 0..k {
            // An empty cluster keeps its previous center.
            if counts[j] > 0 {
                for (c, s) in centers[j * dim..(j + 1) * dim].iter_mut().zip(&sums[j * dim..(j + 1) * dim]) {
                    *c = (s / counts[j] as f64) as f32;
                }
            }
        }
        if let [.., prev, last] = trace[..] {
            if prev - last <= params.tolerance * prev {
                break;
            }
        }
    }
    let fingerprint = format!("kmeans:k={k}:seed={seed}");
    Ok((Codebook::new(dim, centers, fingerprint)?, trace))
}

pub fn kmeans(points: &[f32], dim: usize, k: usize, seed: u64, params: &KmeansParams) -> Result<Codebook> {
    kmeans_traced(points, dim, k, seed, params).map(|r| r.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn two_pairs_on_a_line() {
        let pts = [0.0, 1.0, 10.0, 11.0];
        let cb = kmeans(&pts, 1, 2, 3, &KmeansParams::default()).unwrap();
        let mut w = cb.words.clone();
        w.sort_by(f32::total_cmp);
        assert_eq!(w, vec![0.5, 10.5]);
    }

    #[test]
    fn single_cluster_is_the_mean() {
        let pts = [1.0, 2.0, 3.0, 6.0, 5.0, 10.0];
        let cb = kmeans(&pts, 2, 1, 0, &KmeansParams::default()).unwrap();
        assert_eq!(cb.words, vec![3.0, 6.0]);
    }

    #[test]
    fn too_few_distinct_points() {
        let pts = [1.0, 1.0, 1.0, 2.0];
        assert!(matches!(kmeans(&pts, 1, 3, 0, &KmeansParams::default()), Err(Error::NotEnoughData(_))));
        assert!(kmeans(&pts, 1, 2, 0, &KmeansParams::default()).is_ok());
    }

    #[test]
    fn nearest_prefers_lowest_index() {
        let cb = Codebook::new(1, vec![0.0, 2.0, 2.0], "t").unwrap();
        assert_eq!(cb.nearest(&[1.0]), 0);
        assert_eq!(cb.nearest(&[1.9]), 1);
    }

    fn cloud(seed: u64, n: usize, dim: usize) -> Vec<f32> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n * dim).map(|_| rng.gen::<f32>()).collect()
    }

    #[test]
    fn same_seed_same_codebook() {
        let pts = cloud(5, 300, 4);
        let a = kmeans(&pts, 4, 7, 11, &KmeansParams::default()).unwrap();
        let b = kmeans(&pts, 4, 7, 11, &KmeansParams::default()).unwrap();
        assert_eq!(a, b);
        let words: HashSet<Vec<u32>> = a.words.chunks(4).map(|w| w.iter().map(|v| v.to_bits()).collect()).collect();
        assert_eq!(words.len(), 7);
    }

    proptest! {
        #[test]
        fn inertia_never_increases(seed in 0u64..1000, k in 1usize..6) {
            let pts = cloud(seed, 120, 3);
            let (_, trace) = kmeans_traced(&pts, 3, k, seed, &KmeansParams { max_iterations: 30, tolerance: 0.0 }).unwrap();
            for pair in trace.windows(2) {
                prop_assert!(pair[1] <= pair[0] * (1.0 + 1e-6));
            }
        }
    }
}
