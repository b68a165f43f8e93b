use std::collections::BTreeSet;

use super::cache::FeatureCache;
use super::classify::nearest_rows;
use super::tasks::{Task, TaskSuite};
use crate::error::{Error, Result};
use crate::imgcore::GridPos;

/// Which grid positions supply training and test patches.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PatchSplit {
    /// Even-parity positions train, odd-parity positions test.
    Chessboard,
    /// Training and test use the same eight training positions.
    Identical,
}

impl PatchSplit {
    fn positions(self) -> (Vec<u8>, Vec<u8>) {
        let train: Vec<u8> = GridPos::all().filter(|p| p.is_train()).map(|p| p.index()).collect();
        let test = match self {
            PatchSplit::Chessboard => GridPos::all().filter(|p| !p.is_train()).map(|p| p.index()).collect(),
            PatchSplit::Identical => train.clone(),
        };
        (train, test)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubsetResult {
    pub id: usize,
    pub train: String,
    pub test: String,
    pub n_test: usize,
    pub correct: usize,
}

impl SubsetResult {
    pub fn accuracy(&self) -> f64 {
        self.correct as f64 / self.n_test as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalResult {
    pub descriptor: String,
    pub normalizer: String,
    pub task: Task,
    pub per_subset: Vec<SubsetResult>,
    /// (class, accuracy over all subsets of the task).
    pub per_class: Vec<(u16, f64)>,
}

impl EvalResult {
    /// Mean of the subset accuracies, each subset weighted equally.
    pub fn avg(&self) -> f64 {
        self.per_subset.iter().map(SubsetResult::accuracy).sum::<f64>() / self.per_subset.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.per_subset.iter().map(SubsetResult::accuracy).fold(f64::INFINITY, f64::min)
    }
}

pub fn evaluate(cache: &FeatureCache, suite: &TaskSuite) -> Result<EvalResult> {
    evaluate_split(cache, suite, PatchSplit::Chessboard)
}

/// Runs every subset of `suite` with 1-NN L1 classification. The classifier
/// sees only feature vectors and training labels.
pub fn evaluate_split(cache: &FeatureCache, suite: &TaskSuite, split: PatchSplit) -> Result<EvalResult> {
    let index = cache.index();
    let classes: Vec<u16> = cache.entries.iter().map(|e| e.class).collect::<BTreeSet<_>>().into_iter().collect();
    if classes.is_empty() {
        return Err(Error::NotEnoughData(format!("cache for `{}` is empty", cache.descriptor)));
    }
    let (train_pos, test_pos) = split.positions();
    let mut missing = Vec::new();
    let mut gather = |cond: &str, positions: &[u8]| -> (Vec<&[f32]>, Vec<u16>) {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for &class in &classes {
            for &p in positions {
                match index.get(&(class, cond, p)) {
                    Some(i) => {
                        rows.push(&cache.entries[*i].values[..]);
                        labels.push(class);
                    }
                    None => missing.push(format!("class {class} {cond} patch {p}")),
                }
            }
        }
        (rows, labels)
    };
    let mut sets = Vec::with_capacity(suite.subsets.len());
    for s in &suite.subsets {
        let train = gather(&s.train.id, &train_pos);
        let test = gather(&s.test.id, &test_pos);
        sets.push((train, test));
    }
    if !missing.is_empty() {
        missing.dedup();
        return Err(Error::Missing(missing));
    }
    let mut per_subset = Vec::with_capacity(sets.len());
    let mut class_hits = vec![(0usize, 0usize); classes.len()];
    for (s, ((train, train_labels), (test, test_labels))) in suite.subsets.iter().zip(sets) {
        let nearest = nearest_rows(&train, &test)?;
        let mut correct = 0;
        for (j, truth) in nearest.into_iter().zip(&test_labels) {
            let slot = classes.binary_search(truth).expect("label from the class list");
            class_hits[slot].1 += 1;
            if train_labels[j] == *truth {
                correct += 1;
                class_hits[slot].0 += 1;
            }
        }
        per_subset.push(SubsetResult {
            id: s.id,
            train: s.train.id.clone(),
            test: s.test.id.clone(),
            n_test: test_labels.len(),
            correct,
        });
    }
    Ok(EvalResult {
        descriptor: cache.descriptor.clone(),
        normalizer: cache.normalizer.clone(),
        task: suite.task,
        per_subset,
        per_class: classes
            .iter()
            .zip(class_hits)
            .map(|(c, (hit, total))| (*c, hit as f64 / total as f64))
            .collect(),
    })
}
