use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::numgrad::RngState;

/// Assignment of every bag to one of `k` folds.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    /// Bag ids in dataset order.
    pub bag_ids: Vec<String>,
    /// `folds[i]` is the fold of `bag_ids[i]`.
    pub folds: Vec<usize>,
}

impl FoldPlan {
    pub fn fold_of(&self, bag_id: &str) -> Option<usize> {
        self.bag_ids.iter().position(|b| b == bag_id).map(|i| self.folds[i])
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.folds {
            sizes[f] += 1;
        }
        sizes
    }

    /// `(train, test)` dataset indices for holding out `fold`.
    pub fn split(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        (0..self.folds.len()).partition(|&i| self.folds[i] != fold)
    }
}

/// Stratified k-fold assignment.
///
/// Each class is shuffled and dealt round-robin; the dealing position carries
/// over from one class to the next, so per-class counts and total fold sizes
/// each differ by at most one across folds.
pub fn stratified_kfold(dataset: &Dataset, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::Domain(format!("fold count {k} must be at least 2")));
    }
    if k > dataset.len() {
        return Err(Error::Domain(format!(
            "fold count {k} exceeds the {} bags of `{}`",
            dataset.len(),
            dataset.name
        )));
    }
    let mut rng = RngState::new(seed);
    let mut folds = vec![0; dataset.len()];
    let mut next = 0;
    for class in 0..dataset.class_count {
        let mut members: Vec<usize> = (0..dataset.len()).filter(|&i| dataset.bags[i].label == class).collect();
        rng.shuffle(&mut members);
        for i in members {
            folds[i] = next;
            next = (next + 1) % k;
        }
    }
    Ok(FoldPlan {
        k,
        seed,
        bag_ids: dataset.bags.iter().map(|b| b.bag_id.clone()).collect(),
        folds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mildata::Bag;
    use crate::numgrad::Matrix;
    use proptest::prelude::*;

    fn toy(labels: &[usize]) -> Dataset {
        let bags = labels
            .iter()
            .enumerate()
            .map(|(i, &l)| Bag::new(format!("b{i}"), l, Matrix::zeros(1, 1)).unwrap())
            .collect();
        let classes = labels.iter().max().map_or(2, |m| (m + 1).max(2));
        Dataset::new("toy", bags, classes).unwrap()
    }

    #[test]
    fn musk1_shaped_split_sizes() {
        // 47 positive and 45 negative bags, like MUSK1
        let labels: Vec<usize> = (0..92).map(|i| usize::from(i < 47)).collect();
        let plan = stratified_kfold(&toy(&labels), 10, 7).unwrap();
        let mut sizes = plan.fold_sizes();
        sizes.sort_unstable();
        assert_eq!(sizes, [9, 9, 9, 9, 9, 9, 9, 9, 10, 10]);
    }

    #[test]
    fn two_per_class_two_folds() {
        let ds = toy(&[0, 1, 0, 1]);
        let plan = stratified_kfold(&ds, 2, 3).unwrap();
        for f in 0..2 {
            let (_, test) = plan.split(f);
            let mut labels: Vec<usize> = test.iter().map(|&i| ds.bags[i].label).collect();
            labels.sort_unstable();
            assert_eq!(labels, [0, 1]);
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let ds = toy(&[0, 1, 1, 0, 1, 0, 0, 1, 1]);
        assert_eq!(stratified_kfold(&ds, 3, 11).unwrap(), stratified_kfold(&ds, 3, 11).unwrap());
    }

    #[test]
    fn invalid_fold_counts() {
        let ds = toy(&[0, 1, 1]);
        assert!(stratified_kfold(&ds, 4, 0).is_err());
        assert!(stratified_kfold(&ds, 1, 0).is_err());
        assert!(stratified_kfold(&ds, 3, 0).is_ok());
    }

    proptest! {
        #[test]
        fn plan_partitions_and_stratifies(labels in prop::collection::vec(0usize..3, 2..60), k in 2usize..12, seed: u64) {
            prop_assume!(k <= labels.len());
            let ds = toy(&labels);
            let plan = stratified_kfold(&ds, k, seed).unwrap();
            prop_assert_eq!(plan.folds.len(), ds.len());
            prop_assert!(plan.folds.iter().all(|&f| f < k));
            for class in 0..ds.class_count {
                let mut per_fold = vec![0usize; k];
                for (i, b) in ds.bags.iter().enumerate() {
                    if b.label == class {
                        per_fold[plan.folds[i]] += 1;
                    }
                }
                let lo = per_fold.iter().min().unwrap();
                let hi = per_fold.iter().max().unwrap();
                prop_assert!(hi - lo <= 1);
            }
            let sizes = plan.fold_sizes();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            let mut seen = 0;
            for f in 0..k {
                let (train, test) = plan.split(f);
                prop_assert_eq!(train.len() + test.len(), ds.len());
                seen += test.len();
            }
            prop_assert_eq!(seen, ds.len());
        }
    }
}
