use crate::error::{Error, Result};
use crate::texdesc::FeatureVector;

/// Sum of absolute differences, accumulated in double precision.
pub fn l1_slices(a: &[f32], b: &[f32]) -> f64 {
    let mut lanes = [0f64; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| (*x as f64 - *y as f64).abs()).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            lanes[k] += (x[k] as f64 - y[k] as f64).abs();
        }
    }
    (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]) + tail
}

pub fn l1(x: &FeatureVector, y: &FeatureVector) -> Result<f64> {
    if x.descriptor() != y.descriptor() {
        return Err(Error::invalid(format!(
            "comparing `{}` with `{}` features",
            x.descriptor(),
            y.descriptor()
        )));
    }
    if x.dim() != y.dim() {
        return Err(Error::DimMismatch {
            expected: x.dim(),
            actual: y.dim(),
        });
    }
    Ok(l1_slices(x.values(), y.values()))
}

/// Nearest training row in L1 for each query; ties go to the lowest index.
/// Returns the winning row indices.
pub fn nearest_rows(train: &[&[f32]], test: &[&[f32]]) -> Result<Vec<usize>> {
    if train.is_empty() {
        return Err(Error::NotEnoughData("empty training set".into()));
    }
    let dim = train[0].len();
    if let Some(bad) = train.iter().chain(test).find(|v| v.len() != dim) {
        return Err(Error::DimMismatch {
            expected: dim,
            actual: bad.len(),
        });
    }
    Ok(test
        .iter()
        .map(|q| {
            let mut best = (0, f64::INFINITY);
            for (i, t) in train.iter().enumerate() {
                let d = l1_slices(t, q);
                if d < best.1 {
                    best = (i, d);
                }
            }
            best.0
        })
        .collect())
}

/// 1-nearest-neighbor classification in L1 distance.
pub fn classify_1nn(train: &[(FeatureVector, u16)], test: &[FeatureVector]) -> Result<Vec<u16>> {
    let Some((first, _)) = train.first() else {
        return Err(Error::NotEnoughData("empty training set".into()));
    };
    if let Some(v) = train.iter().map(|t| &t.0).chain(test).find(|v| v.descriptor() != first.descriptor()) {
        return Err(Error::invalid(format!(
            "mixed descriptors `{}` and `{}`",
            first.descriptor(),
            v.descriptor()
        )));
    }
    let rows: Vec<&[f32]> = train.iter().map(|t| t.0.values()).collect();
    let queries: Vec<&[f32]> = test.iter().map(|v| v.values()).collect();
    Ok(nearest_rows(&rows, &queries)?.into_iter().map(|i| train[i].1).collect())
}
