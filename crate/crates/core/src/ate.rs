//! Unadjusted average treatment effect with efficient influence curve
//! inference.
//!
//! Without baseline covariates the outcome regression reduces to the arm
//! means `m1`, `m0` and the treatment mechanism to the treated fraction `g`
//! of the sample. Evaluated at the plug-in estimate `ate = m1 - m0`, the
//! influence curve of observation `i` is
//!
//! ```text
//! D_i =  (Y_i - m1) / g        if A_i = 1
//! D_i = -(Y_i - m0) / (1 - g)  if A_i = 0
//! ```
//!
//! Influence values from all folds are pooled; `sigma^2 = mean(D^2)` and the
//! Wald statistic `z = ate / sqrt(sigma^2 / n)` is referred to the standard
//! normal distribution.

use alloc::vec::Vec;

use crate::model::{Dataset, EffectEstimate};
use crate::sum::{mean_over, CompensatedSum};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EstimationError {
    #[error("estimation sample has {treated} treated and {control} control observations")]
    DegenerateSubsample { treated: usize, control: usize },
    #[error("fold effects do not cover folds 1..={folds} exactly once")]
    IncompleteFolds { folds: usize },
    #[error("pooled influence values number {found}, expected {expected}")]
    SampleSizeMismatch { expected: usize, found: usize },
    #[error("fold effects mix outcomes {first} and {other}")]
    MixedOutcomes { first: usize, other: usize },
}

/// Effect estimate of one outcome on one fold's estimation sample.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldEffect {
    pub outcome: usize,
    pub fold: usize,
    pub ate: f64,
    /// Influence values aligned with the fold's estimation rows.
    pub eic: Vec<f64>,
}

/// Pooled cross-fitted estimate; `n` counts the pooled influence values.
pub type PooledEffect = EffectEstimate;

/// Arm means, treated fraction and influence values of outcome `outcome`
/// over `rows`.
pub fn fold_ate(
    dataset: &Dataset,
    outcome: usize,
    fold: usize,
    rows: &[usize],
) -> Result<FoldEffect, EstimationError> {
    let (treated, control): (Vec<usize>, Vec<usize>) =
        rows.iter().partition(|&&i| dataset.is_treated(i));
    if treated.is_empty() || control.is_empty() {
        return Err(EstimationError::DegenerateSubsample {
            treated: treated.len(),
            control: control.len(),
        });
    }
    let y = dataset.column(outcome);
    let m1 = mean_over(y, &treated);
    let m0 = mean_over(y, &control);
    let g = treated.len() as f64 / rows.len() as f64;

    let eic = rows
        .iter()
        .map(|&i| {
            if dataset.is_treated(i) {
                (y[i] - m1) / g
            } else {
                -(y[i] - m0) / (1.0 - g)
            }
        })
        .collect();
    Ok(FoldEffect {
        outcome,
        fold,
        ate: m1 - m0,
        eic,
    })
}

/// Averages fold estimates and pools their influence values.
///
/// `fold_effects` must hold exactly one entry per fold `1..=V` for a single
/// outcome, and the estimation samples together must number `n` rows.
pub fn pool_effect(fold_effects: &[FoldEffect], n: usize) -> Result<PooledEffect, EstimationError> {
    let folds = fold_effects.len();
    let first = fold_effects
        .first()
        .ok_or(EstimationError::IncompleteFolds { folds })?;
    let mut seen = alloc::vec![false; folds];
    let mut total = 0;
    for fe in fold_effects {
        if fe.outcome != first.outcome {
            return Err(EstimationError::MixedOutcomes {
                first: first.outcome,
                other: fe.outcome,
            });
        }
        if fe.fold == 0 || fe.fold > folds || seen[fe.fold - 1] {
            return Err(EstimationError::IncompleteFolds { folds });
        }
        seen[fe.fold - 1] = true;
        total += fe.eic.len();
    }
    if total != n {
        return Err(EstimationError::SampleSizeMismatch {
            expected: n,
            found: total,
        });
    }

    let mut ate = CompensatedSum::default();
    let mut sq = CompensatedSum::default();
    for fe in fold_effects {
        ate.add(fe.ate);
        for &d in &fe.eic {
            sq.add(d * d);
        }
    }
    let ate = ate.total() / folds as f64;
    let eic_variance = sq.total() / n as f64;
    Ok(wald(first.outcome, ate, eic_variance, n))
}

/// Wald test of `ate` given the influence-curve variance. A zero variance
/// gives `p = 1` for a zero effect and `p = 0` (flagged degenerate) otherwise.
pub fn wald(outcome: usize, ate: f64, eic_variance: f64, n: usize) -> EffectEstimate {
    let (z_stat, p_value, degenerate) = if eic_variance > 0.0 {
        let z = ate / libm::sqrt(eic_variance / n as f64);
        (z, normal_p(z), false)
    } else if ate == 0.0 {
        (0.0, 1.0, false)
    } else {
        (libm::copysign(f64::INFINITY, ate), 0.0, true)
    };
    EffectEstimate {
        outcome,
        ate,
        eic_variance,
        n,
        z_stat,
        p_value,
        degenerate,
    }
}

/// Two-sided standard normal tail probability `2 * Phi(-|z|)`, evaluated as
/// `erfc(|z| / sqrt 2)` with the musl-derived `libm::erfc` (relative error
/// below 1e-15 over the range used here).
pub fn normal_p(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    libm::erfc(libm::fabs(z) * core::f64::consts::FRAC_1_SQRT_2).min(1.0)
}
