use std::cmp::Ordering;

use super::gmm::{GaussianMixture, Scorer};
use super::kmeans::Codebook;
use super::sift::LocalDescriptorSet;
use crate::error::{Error, Result};

fn check(local: &LocalDescriptorSet, dim: usize) -> Result<()> {
    if local.is_empty() {
        return Err(Error::NotEnoughData("empty local descriptor set".into()));
    }
    let have = local.descriptors.len() / local.len();
    if have != dim {
        return Err(Error::DimMismatch {
            expected: dim,
            actual: have,
        });
    }
    Ok(())
}

/// Descriptor indices in lexicographic value order, so that sums over the
/// set do not depend on the input order.
fn canonical_order(local: &LocalDescriptorSet) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..local.len()).collect();
    idx.sort_by(|a, b| {
        local
            .get(*a)
            .iter()
            .zip(local.get(*b))
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| *o != Ordering::Equal)
            .unwrap_or(Ordering::Equal)
    });
    idx
}

fn signed_sqrt_l2(v: &mut [f64]) {
    v.iter_mut().for_each(|x| *x = x.signum() * x.abs().sqrt());
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

/// Hard-assignment word histogram normalized to sum one.
pub fn encode_bovw(local: &LocalDescriptorSet, cb: &Codebook) -> Result<Vec<f64>> {
    check(local, cb.dim)?;
    let mut counts = vec![0u64; cb.k()];
    for d in local.iter() {
        counts[cb.nearest(d)] += 1;
    }
    let n = local.len() as f64;
    Ok(counts.iter().map(|c| *c as f64 / n).collect())
}

/// Residuals to the nearest word summed per word, signed square root, L2.
pub fn encode_vlad(local: &LocalDescriptorSet, cb: &Codebook) -> Result<Vec<f64>> {
    check(local, cb.dim)?;
    let dim = cb.dim;
    let mut out = vec![0.0; cb.k() * dim];
    for i in canonical_order(local) {
        let d = local.get(i);
        let j = cb.nearest(d);
        for ((o, x), c) in out[j * dim..(j + 1) * dim].iter_mut().zip(d).zip(cb.word(j)) {
            *o += (*x - *c) as f64;
        }
    }
    signed_sqrt_l2(&mut out);
    Ok(out)
}

/// Improved Fisher vector: per component, the normalized gradients with
/// respect to the mean and the standard deviation, then signed square
/// root and L2.
pub fn encode_fv(local: &LocalDescriptorSet, gmm: &GaussianMixture) -> Result<Vec<f64>> {
    check(local, gmm.dim)?;
    let (dim, k) = (gmm.dim, gmm.k());
    let mut out = vec![0.0; 2 * k * dim];
    let mut post = vec![0.0; k];
    let sd: Vec<f64> = gmm.variances.iter().map(|v| v.sqrt()).collect();
    let scorer = Scorer::new(gmm);
    for i in canonical_order(local) {
        let x = local.get(i);
        scorer.posteriors(x, &mut post);
        for (j, g) in post.iter().enumerate() {
            if *g == 0.0 {
                continue;
            }
            let (m, s) = (gmm.mean(j), &sd[j * dim..(j + 1) * dim]);
            let block = &mut out[2 * j * dim..2 * (j + 1) * dim];
            let (gm, gs) = block.split_at_mut(dim);
            for d in 0..dim {
                let z = (x[d] as f64 - m[d]) / s[d];
                gm[d] += g * z;
                gs[d] += g * (z * z - 1.0);
            }
        }
    }
    let n = local.len() as f64;
    for j in 0..k {
        let w = gmm.weights[j];
        let (fm, fs) = if w > 0.0 { (1.0 / (n * w.sqrt()), 1.0 / (n * (2.0 * w).sqrt())) } else { (0.0, 0.0) };
        let block = &mut out[2 * j * dim..2 * (j + 1) * dim];
        block[..dim].iter_mut().for_each(|v| *v *= fm);
        block[dim..].iter_mut().for_each(|v| *v *= fs);
    }
    signed_sqrt_l2(&mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::sift::SIFT_DIM;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_set(n: usize, seed: u64) -> LocalDescriptorSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut set = LocalDescriptorSet::default();
        for i in 0..n {
            let d: Vec<f32> = (0..SIFT_DIM).map(|_| rng.gen::<f32>() * 0.2).collect();
            set.push(&d, (i as f32, 0.0, 1.0));
        }
        set
    }

    fn codebook(k: usize, seed: u64) -> Codebook {
        let words = random_set(k, seed).descriptors;
        Codebook::new(SIFT_DIM, words, "test").unwrap()
    }

    fn mixture(k: usize, seed: u64) -> GaussianMixture {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let means = random_set(k, seed).descriptors.iter().map(|v| *v as f64).collect();
        let variances = (0..k * SIFT_DIM).map(|_| 0.002 + 0.01 * rng.gen::<f64>()).collect();
        GaussianMixture::new(SIFT_DIM, vec![1.0 / k as f64; k], means, variances, "test").unwrap()
    }

    fn shuffled(set: &LocalDescriptorSet, seed: u64) -> LocalDescriptorSet {
        let mut idx: Vec<usize> = (0..set.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..idx.len()).rev() {
            idx.swap(i, rng.gen_range(0..=i));
        }
        let mut out = LocalDescriptorSet::default();
        for i in idx {
            out.push(set.get(i), set.positions[i]);
        }
        out
    }

    #[test]
    fn bovw_of_one_word() {
        let cb = codebook(5, 1);
        let mut set = LocalDescriptorSet::default();
        set.push(cb.word(0), (0.0, 0.0, 1.0));
        set.push(cb.word(0), (1.0, 0.0, 1.0));
        let h = encode_bovw(&set, &cb).unwrap();
        assert_eq!(h, vec![1.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn vlad_of_one_descriptor() {
        let cb = codebook(6, 2);
        let set = random_set(1, 3);
        let d = set.get(0);
        let j = cb.nearest(d);
        let v = encode_vlad(&set, &cb).unwrap();
        let mut want: Vec<f64> = d.iter().zip(cb.word(j)).map(|(x, c)| (*x - *c) as f64).collect();
        signed_sqrt_l2(&mut want);
        for (b, block) in v.chunks(SIFT_DIM).enumerate() {
            if b == j {
                assert_eq!(block, &want[..]);
            } else {
                assert!(block.iter().all(|x| *x == 0.0));
            }
        }
    }

    #[test]
    fn fv_mean_gradient_vanishes_at_the_mean() {
        let g = GaussianMixture::new(SIFT_DIM, vec![1.0], vec![0.1f32 as f64; SIFT_DIM], vec![0.01; SIFT_DIM], "t").unwrap();
        let mut set = LocalDescriptorSet::default();
        set.push(&[0.1; SIFT_DIM], (0.0, 0.0, 1.0));
        let f = encode_fv(&set, &g).unwrap();
        assert_eq!(f.len(), 2 * SIFT_DIM);
        assert!(f[..SIFT_DIM].iter().all(|v| *v == 0.0));
        assert!(f[SIFT_DIM..].iter().all(|v| *v < 0.0));
    }

    #[test]
    fn empty_set_is_an_error() {
        let set = LocalDescriptorSet::default();
        assert!(encode_bovw(&set, &codebook(2, 0)).is_err());
        assert!(encode_vlad(&set, &codebook(2, 0)).is_err());
        assert!(encode_fv(&set, &mixture(2, 0)).is_err());
    }

    #[test]
    fn encodings_ignore_order() {
        let set = random_set(300, 7);
        let perm = shuffled(&set, 8);
        let cb = codebook(10, 4);
        let g = mixture(4, 5);
        assert_eq!(encode_bovw(&set, &cb).unwrap(), encode_bovw(&perm, &cb).unwrap());
        assert_eq!(encode_vlad(&set, &cb).unwrap(), encode_vlad(&perm, &cb).unwrap());
        assert_eq!(encode_fv(&set, &g).unwrap(), encode_fv(&perm, &g).unwrap());
    }

    #[test]
    fn duplicating_the_set_changes_nothing() {
        let set = random_set(200, 9);
        let mut twice = set.clone();
        for i in 0..set.len() {
            twice.push(set.get(i), set.positions[i]);
        }
        let cb = codebook(8, 1);
        let g = mixture(3, 2);
        assert_eq!(encode_bovw(&set, &cb).unwrap(), encode_bovw(&twice, &cb).unwrap());
        let close = |a: Vec<f64>, b: Vec<f64>| a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-9);
        assert!(close(encode_vlad(&set, &cb).unwrap(), encode_vlad(&twice, &cb).unwrap()));
        assert!(close(encode_fv(&set, &g).unwrap(), encode_fv(&twice, &g).unwrap()));
    }

    #[test]
    fn nearest_word_matches_brute_force() {
        let cb = codebook(64, 11);
        let set = random_set(1000, 12);
        for d in set.iter() {
            let mut best = (0, f64::INFINITY);
            for j in 0..cb.k() {
                let dist: f64 = d.iter().zip(cb.word(j)).map(|(a, b)| (*a as f64 - *b as f64).powi(2)).sum();
                if dist < best.1 {
                    best = (j, dist);
                }
            }
            assert_eq!(cb.nearest(d), best.0);
        }
    }
}
