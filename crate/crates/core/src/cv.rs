//! Treatment-stratified V-fold partitions.
//!
//! Fold assignment is a deterministic function of the treatment vector, the
//! fold count and a 64-bit seed:
//!
//! 1. a `ChaCha8Rng` is seeded with `seed_from_u64(seed)`;
//! 2. the ascending list of treated rows is shuffled (Fisher-Yates, as
//!    implemented by `rand::seq::SliceRandom::shuffle`), then the ascending
//!    list of control rows is shuffled with the same generator;
//! 3. the shuffled treated rows are dealt round-robin to folds `1..=V`, and
//!    the control rows continue the same cycle where the treated rows stopped.
//!
//! Continuing the cycle keeps overall fold sizes within one of each other in
//! addition to the per-arm counts.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::Dataset;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FoldError {
    #[error("fold count must be at least 2, got {folds}")]
    TooFewFolds { folds: usize },
    #[error("{folds} folds exceed the smallest treatment arm ({arm_size} observations)")]
    TooManyFolds { folds: usize, arm_size: usize },
    #[error("fold {fold} is outside 1..={folds}")]
    FoldOutOfRange { fold: usize, folds: usize },
    #[error("fold label vector has length {found}, expected {expected}")]
    LabelLength { expected: usize, found: usize },
    #[error("fold {fold} lacks a treated or a control observation")]
    MissingArm { fold: usize },
}

/// A partition of the observations into `V` estimation samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    folds: usize,
    labels: Vec<usize>,
    members: Vec<Vec<usize>>,
}

/// Index views of one fold: the parameter-generating sample `L - L_v` and the
/// estimation sample `L_v`. Both are ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldView<'a> {
    pub fold: usize,
    pub parameter: Vec<usize>,
    pub estimation: &'a [usize],
}

/// Stratified random assignment of observations to `folds` folds.
pub fn assign_folds(dataset: &Dataset, folds: usize, seed: u64) -> Result<FoldPlan, FoldError> {
    if folds < 2 {
        return Err(FoldError::TooFewFolds { folds });
    }
    let arm_size = dataset.treated().len().min(dataset.control().len());
    if folds > arm_size {
        return Err(FoldError::TooManyFolds { folds, arm_size });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut treated = dataset.treated().to_vec();
    let mut control = dataset.control().to_vec();
    treated.shuffle(&mut rng);
    control.shuffle(&mut rng);

    let mut labels = vec![0; dataset.n()];
    for (k, &row) in treated.iter().chain(control.iter()).enumerate() {
        labels[row] = k % folds + 1;
    }
    Ok(FoldPlan::build(folds, labels))
}

impl FoldPlan {
    /// Wraps an explicit 1-based label vector, checking that every fold is
    /// non-empty and contains both arms.
    pub fn from_labels(dataset: &Dataset, folds: usize, labels: Vec<usize>) -> Result<Self, FoldError> {
        if folds < 2 {
            return Err(FoldError::TooFewFolds { folds });
        }
        if labels.len() != dataset.n() {
            return Err(FoldError::LabelLength {
                expected: dataset.n(),
                found: labels.len(),
            });
        }
        if let Some(&fold) = labels.iter().find(|&&l| l == 0 || l > folds) {
            return Err(FoldError::FoldOutOfRange { fold, folds });
        }
        let plan = Self::build(folds, labels);
        for (v, rows) in plan.members.iter().enumerate() {
            let treated = rows.iter().filter(|&&i| dataset.is_treated(i)).count();
            if treated == 0 || treated == rows.len() {
                return Err(FoldError::MissingArm { fold: v + 1 });
            }
        }
        Ok(plan)
    }

    fn build(folds: usize, labels: Vec<usize>) -> Self {
        let mut members = vec![Vec::new(); folds];
        for (row, &label) in labels.iter().enumerate() {
            members[label - 1].push(row);
        }
        Self {
            folds,
            labels,
            members,
        }
    }

    pub fn folds(&self) -> usize {
        self.folds
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    /// Fold label (1-based) of every observation.
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Estimation sample of fold `v` (1-based).
    pub fn estimation(&self, v: usize) -> Result<&[usize], FoldError> {
        self.check(v)?;
        Ok(&self.members[v - 1])
    }

    pub fn fold_views(&self, v: usize) -> Result<FoldView<'_>, FoldError> {
        self.check(v)?;
        let parameter = self
            .labels
            .iter()
            .enumerate()
            .filter(|&(_, &l)| l != v)
            .map(|(i, _)| i)
            .collect();
        Ok(FoldView {
            fold: v,
            parameter,
            estimation: &self.members[v - 1],
        })
    }

    fn check(&self, v: usize) -> Result<(), FoldError> {
        if v == 0 || v > self.folds {
            return Err(FoldError::FoldOutOfRange {
                fold: v,
                folds: self.folds,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_dataset, OutcomeMatrix};
    use alloc::string::String;

    fn dataset(treatment: Vec<u8>) -> Dataset {
        let n = treatment.len();
        let m = OutcomeMatrix::from_column_major(n, 1, (0..n).map(|i| i as f64).collect()).unwrap();
        validate_dataset(m, treatment, vec![String::from("y")]).unwrap()
    }

    fn arm_counts(ds: &Dataset, plan: &FoldPlan) -> (Vec<usize>, Vec<usize>) {
        let mut t = vec![0; plan.folds()];
        let mut c = vec![0; plan.folds()];
        for (i, &l) in plan.labels().iter().enumerate() {
            if ds.is_treated(i) {
                t[l - 1] += 1;
            } else {
                c[l - 1] += 1;
            }
        }
        (t, c)
    }

    #[test]
    fn balanced_five_by_five() {
        let ds = dataset(vec![1, 0, 1, 0, 1, 0, 1, 0, 1, 0]);
        let plan = assign_folds(&ds, 5, 11).unwrap();
        let (t, c) = arm_counts(&ds, &plan);
        assert_eq!(t, vec![1; 5]);
        assert_eq!(c, vec![1; 5]);
    }

    #[test]
    fn seven_into_three() {
        let ds = dataset(vec![1, 1, 1, 1, 0, 0, 0]);
        for seed in 0..20 {
            let plan = assign_folds(&ds, 3, seed).unwrap();
            let (t, c) = arm_counts(&ds, &plan);
            assert_eq!(t, vec![2, 1, 1]);
            assert_eq!(c, vec![1, 1, 1]);
        }
    }

    #[test]
    fn too_many_folds() {
        let ds = dataset(vec![1, 1, 1, 1, 0, 0, 0]);
        assert_eq!(
            assign_folds(&ds, 4, 0),
            Err(FoldError::TooManyFolds { folds: 4, arm_size: 3 })
        );
        assert_eq!(assign_folds(&ds, 1, 0), Err(FoldError::TooFewFolds { folds: 1 }));
    }

    #[test]
    fn views_are_complements() {
        let ds = dataset(vec![1, 0, 1, 0, 1, 0, 1, 0, 1, 0]);
        let plan = assign_folds(&ds, 5, 3).unwrap();
        let view = plan.fold_views(3).unwrap();
        assert_eq!(view.estimation.len(), 2);
        assert_eq!(view.parameter.len(), 8);
        assert!(view.parameter.iter().all(|i| !view.estimation.contains(i)));
        assert!(matches!(
            plan.fold_views(6),
            Err(FoldError::FoldOutOfRange { fold: 6, folds: 5 })
        ));
        assert!(plan.fold_views(0).is_err());
    }

    #[test]
    fn two_folds_swap_roles() {
        let ds = dataset(vec![1, 1, 0, 0, 1, 0]);
        let plan = FoldPlan::from_labels(&ds, 2, vec![1, 2, 1, 2, 2, 1]).unwrap();
        let one = plan.fold_views(1).unwrap();
        let two = plan.fold_views(2).unwrap();
        assert_eq!(one.parameter, two.estimation);
        assert_eq!(two.parameter, one.estimation);
    }

    #[test]
    fn explicit_labels_checked() {
        let ds = dataset(vec![1, 1, 0, 0]);
        assert_eq!(
            FoldPlan::from_labels(&ds, 2, vec![1, 2, 2, 1, 1]),
            Err(FoldError::LabelLength { expected: 4, found: 5 })
        );
        assert_eq!(
            FoldPlan::from_labels(&ds, 2, vec![1, 1, 2, 2]),
            Err(FoldError::MissingArm { fold: 1 })
        );
        assert!(matches!(
            FoldPlan::from_labels(&ds, 2, vec![1, 3, 2, 1]),
            Err(FoldError::FoldOutOfRange { fold: 3, .. })
        ));
    }

    #[test]
    fn seed_changes_assignment() {
        let ds = dataset((0..40).map(|i| (i % 2) as u8).collect());
        let a = assign_folds(&ds, 4, 1).unwrap();
        let b = assign_folds(&ds, 4, 2).unwrap();
        assert_ne!(a.labels(), b.labels());
        assert_eq!(a, assign_folds(&ds, 4, 1).unwrap());
    }
}
