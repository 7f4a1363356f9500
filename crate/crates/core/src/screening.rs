//! Per-fold screening of outcomes by empirical treatment effect, and the
//! aggregation of fold rankings into mean CV-ranks.

use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::model::{Dataset, Direction};
use crate::sum::mean_over;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScreenError {
    #[error("subsample has {treated} treated and {control} control observations")]
    DegenerateSubsample { treated: usize, control: usize },
    #[error("effect size of outcome {outcome} is not finite")]
    NonFiniteEffect { outcome: usize },
    #[error("reduced-set size must lie in 1..={p}, got {p_star}")]
    InvalidTop { p_star: usize, p: usize },
    #[error("fold result covers {found} outcomes, expected {expected}")]
    InconsistentDimensions { expected: usize, found: usize },
    #[error("no fold results to aggregate")]
    NoFolds,
}

/// Screening outcome of one fold.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldScreenResult {
    pub fold: usize,
    /// Empirical effect size of every outcome on the parameter-generating sample.
    pub effects: Vec<f64>,
    /// Rank of every outcome, 1 = best.
    pub ranks: Vec<usize>,
    /// Outcomes ranked `1..=p_star`, in rank order.
    pub selected: Vec<usize>,
}

/// Mean ranks and top-set appearance rates over all folds.
#[derive(Debug, Clone, PartialEq)]
pub struct RankAggregate {
    pub folds: usize,
    pub mean_rank: Vec<f64>,
    pub pct_top: Vec<f64>,
    /// The `p_star` outcomes with the smallest mean rank, best first.
    pub final_set: Vec<usize>,
}

// Columns per parallel work item.
#[cfg(feature = "parallel")]
const COLUMN_BLOCK: usize = 2048;

/// Difference of treated and control means of every outcome over `rows`.
pub fn fold_effect_sizes(dataset: &Dataset, rows: &[usize]) -> Result<Vec<f64>, ScreenError> {
    let (treated, control): (Vec<usize>, Vec<usize>) =
        rows.iter().partition(|&&i| dataset.is_treated(i));
    if treated.is_empty() || control.is_empty() {
        return Err(ScreenError::DegenerateSubsample {
            treated: treated.len(),
            control: control.len(),
        });
    }
    let effect = |j: usize| {
        let col = dataset.column(j);
        mean_over(col, &treated) - mean_over(col, &control)
    };

    let mut out = alloc::vec![0.0; dataset.p()];
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        out.par_chunks_mut(COLUMN_BLOCK)
            .enumerate()
            .for_each(|(b, chunk)| {
                for (k, slot) in chunk.iter_mut().enumerate() {
                    *slot = effect(b * COLUMN_BLOCK + k);
                }
            });
    }
    #[cfg(not(feature = "parallel"))]
    for (j, slot) in out.iter_mut().enumerate() {
        *slot = effect(j);
    }

    if let Some(outcome) = out.iter().position(|e| !e.is_finite()) {
        return Err(ScreenError::NonFiniteEffect { outcome });
    }
    Ok(out)
}

/// Total order used by every ranking: better score first, then lower index.
#[inline]
fn rank_order(effects: &[f64], direction: Direction, a: usize, b: usize) -> Ordering {
    let (sa, sb) = (direction.score(effects[a]), direction.score(effects[b]));
    sb.partial_cmp(&sa).unwrap_or(Ordering::Equal).then(a.cmp(&b))
}

fn check_effects(effects: &[f64], p_star: usize) -> Result<(), ScreenError> {
    if p_star == 0 || p_star > effects.len() {
        return Err(ScreenError::InvalidTop {
            p_star,
            p: effects.len(),
        });
    }
    if let Some(outcome) = effects.iter().position(|e| !e.is_finite()) {
        return Err(ScreenError::NonFiniteEffect { outcome });
    }
    Ok(())
}

/// Ranks all outcomes of one fold and selects the top `p_star`.
pub fn rank_fold(
    fold: usize,
    effects: Vec<f64>,
    direction: Direction,
    p_star: usize,
) -> Result<FoldScreenResult, ScreenError> {
    check_effects(&effects, p_star)?;
    let mut order: Vec<usize> = (0..effects.len()).collect();
    order.sort_unstable_by(|&a, &b| rank_order(&effects, direction, a, b));

    let mut ranks = alloc::vec![0; effects.len()];
    for (pos, &j) in order.iter().enumerate() {
        ranks[j] = pos + 1;
    }
    order.truncate(p_star);
    Ok(FoldScreenResult {
        fold,
        effects,
        ranks,
        selected: order,
    })
}

/// Top `k` outcomes under `direction` without ranking the rest.
pub fn select_top(effects: &[f64], direction: Direction, k: usize) -> Result<Vec<usize>, ScreenError> {
    check_effects(effects, k)?;
    let mut idx: Vec<usize> = (0..effects.len()).collect();
    let cmp = |a: &usize, b: &usize| rank_order(effects, direction, *a, *b);
    if k < idx.len() {
        idx.select_nth_unstable_by(k - 1, cmp);
        idx.truncate(k);
    }
    idx.sort_unstable_by(cmp);
    Ok(idx)
}

/// Running aggregate of fold rankings. Keeps only integer rank sums and
/// top-set counts, so fold results can be dropped once pushed.
#[derive(Debug, Clone)]
pub struct RankAccumulator {
    p_star: usize,
    folds: usize,
    rank_sums: Vec<u64>,
    top_counts: Vec<u32>,
}

impl RankAccumulator {
    pub fn new(p: usize, p_star: usize) -> Self {
        Self {
            p_star,
            folds: 0,
            rank_sums: alloc::vec![0; p],
            top_counts: alloc::vec![0; p],
        }
    }

    pub fn push(&mut self, fold: &FoldScreenResult) -> Result<(), ScreenError> {
        let p = self.rank_sums.len();
        if fold.ranks.len() != p {
            return Err(ScreenError::InconsistentDimensions {
                expected: p,
                found: fold.ranks.len(),
            });
        }
        for (j, &r) in fold.ranks.iter().enumerate() {
            self.rank_sums[j] += r as u64;
            if r <= self.p_star {
                self.top_counts[j] += 1;
            }
        }
        self.folds += 1;
        Ok(())
    }

    pub fn finish(self) -> Result<RankAggregate, ScreenError> {
        if self.folds == 0 {
            return Err(ScreenError::NoFolds);
        }
        let p = self.rank_sums.len();
        if self.p_star == 0 || self.p_star > p {
            return Err(ScreenError::InvalidTop {
                p_star: self.p_star,
                p,
            });
        }
        let v = self.folds as f64;
        let sums = &self.rank_sums;
        let cmp = |a: &usize, b: &usize| sums[*a].cmp(&sums[*b]).then(a.cmp(b));
        let mut final_set: Vec<usize> = (0..p).collect();
        if self.p_star < p {
            final_set.select_nth_unstable_by(self.p_star - 1, cmp);
            final_set.truncate(self.p_star);
        }
        final_set.sort_unstable_by(cmp);

        Ok(RankAggregate {
            folds: self.folds,
            mean_rank: sums.iter().map(|&s| s as f64 / v).collect(),
            pct_top: self
                .top_counts
                .iter()
                .map(|&c| 100.0 * c as f64 / v)
                .collect(),
            final_set,
        })
    }
}

/// Mean CV-rank, percentage of folds in the top `p_star`, and the final set.
pub fn aggregate_ranks(folds: &[FoldScreenResult], p_star: usize) -> Result<RankAggregate, ScreenError> {
    let first = folds.first().ok_or(ScreenError::NoFolds)?;
    let mut acc = RankAccumulator::new(first.ranks.len(), p_star);
    for fold in folds {
        acc.push(fold)?;
    }
    acc.finish()
}
