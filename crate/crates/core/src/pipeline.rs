//! End-to-end procedures: the cross-validated data-adaptive analysis and the
//! naive whole-sample baseline.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use sha2::{Digest, Sha256};

use crate::ate::{fold_ate, pool_effect, EstimationError};
use crate::cv::{assign_folds, FoldError, FoldPlan};
use crate::fdr::{bh_adjust, FdrError};
use crate::model::{AnalysisConfig, ConfigError, Dataset, Direction, EffectEstimate, ReportRow};
use crate::screening::{fold_effect_sizes, rank_fold, FoldScreenResult, RankAccumulator, ScreenError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Folds(#[from] FoldError),
    #[error("screening failed in fold {fold}: {source}")]
    Screen {
        fold: usize,
        #[source]
        source: ScreenError,
    },
    #[error("aggregating fold ranks failed: {0}")]
    Aggregate(#[source] ScreenError),
    #[error("estimation failed for outcome {outcome}: {source}")]
    Estimate {
        outcome: usize,
        #[source]
        source: EstimationError,
    },
    #[error(transparent)]
    Fdr(#[from] FdrError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Adaptive,
    Naive,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Adaptive => "adaptive",
            Method::Naive => "naive",
        }
    }
}

/// Identifies the input a report was computed from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetFingerprint {
    pub n: usize,
    pub p: usize,
    pub n_treated: usize,
    pub n_control: usize,
    /// Lowercase hex SHA-256 over dimensions, treatment bytes, outcome bit
    /// patterns (column-major, little endian) and length-prefixed names.
    pub checksum: String,
}

impl DatasetFingerprint {
    pub fn of(dataset: &Dataset) -> Self {
        let mut h = Sha256::new();
        h.update((dataset.n() as u64).to_le_bytes());
        h.update((dataset.p() as u64).to_le_bytes());
        h.update(dataset.treatment());
        for v in dataset.values() {
            h.update(v.to_bits().to_le_bytes());
        }
        for name in dataset.names() {
            h.update((name.len() as u64).to_le_bytes());
            h.update(name.as_bytes());
        }
        let mut checksum = String::with_capacity(64);
        for b in h.finalize().iter() {
            let _ = write!(checksum, "{b:02x}");
        }
        Self {
            n: dataset.n(),
            p: dataset.p(),
            n_treated: dataset.treated().len(),
            n_control: dataset.control().len(),
            checksum,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisReport {
    pub method: Method,
    /// Effective parameters. The naive baseline reports one whole-sample fold
    /// and `p_star = p`.
    pub config: AnalysisConfig,
    pub fingerprint: DatasetFingerprint,
    /// Sorted by mean CV-rank, best first.
    pub rows: Vec<ReportRow>,
    /// Fold assignment used by an adaptive run.
    pub fold_plan: Option<FoldPlan>,
}

impl AnalysisReport {
    /// Rows whose adjusted p-value is at most `alpha`.
    pub fn discoveries(&self, alpha: f64) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(move |r| r.adjusted_p <= alpha)
    }
}

/// Runs the cross-validated procedure with a seeded stratified fold plan.
pub fn run_adaptive(dataset: &Dataset, config: &AnalysisConfig) -> Result<AnalysisReport, PipelineError> {
    run_adaptive_audited(dataset, config, |_| {})
}

/// As [`run_adaptive`], handing every fold's screening result to `on_fold`
/// before it is dropped.
pub fn run_adaptive_audited<F>(
    dataset: &Dataset,
    config: &AnalysisConfig,
    on_fold: F,
) -> Result<AnalysisReport, PipelineError>
where
    F: FnMut(&FoldScreenResult),
{
    config.validate(dataset)?;
    let plan = assign_folds(dataset, config.folds, config.seed)?;
    run_adaptive_with_plan(dataset, config, plan, on_fold)
}

/// Runs the procedure on an explicit fold plan; `config.folds` and
/// `config.seed` are taken as given and only echoed.
pub fn run_adaptive_with_plan<F>(
    dataset: &Dataset,
    config: &AnalysisConfig,
    plan: FoldPlan,
    mut on_fold: F,
) -> Result<AnalysisReport, PipelineError>
where
    F: FnMut(&FoldScreenResult),
{
    let mut config = *config;
    config.folds = plan.folds();
    config.validate(dataset)?;
    let n = dataset.n();

    let mut ranks = RankAccumulator::new(dataset.p(), config.p_star);
    for v in 1..=plan.folds() {
        let view = plan.fold_views(v)?;
        let screened = fold_effect_sizes(dataset, &view.parameter)
            .and_then(|effects| rank_fold(v, effects, config.direction, config.p_star))
            .map_err(|source| PipelineError::Screen { fold: v, source })?;
        on_fold(&screened);
        ranks
            .push(&screened)
            .map_err(|source| PipelineError::Screen { fold: v, source })?;
    }
    let aggregate = ranks.finish().map_err(PipelineError::Aggregate)?;

    let estimate = |j: usize| -> Result<EffectEstimate, PipelineError> {
        let wrap = |source| PipelineError::Estimate { outcome: j, source };
        let mut per_fold = Vec::with_capacity(plan.folds());
        for v in 1..=plan.folds() {
            let rows = plan.estimation(v)?;
            per_fold.push(fold_ate(dataset, j, v, rows).map_err(wrap)?);
        }
        pool_effect(&per_fold, n).map_err(wrap)
    };
    let estimates = map_outcomes(&aggregate.final_set, estimate)?;

    let raw: Vec<f64> = estimates.iter().map(|e| e.p_value).collect();
    let adjusted = bh_adjust(&raw)?.adjusted;
    let rows = estimates
        .iter()
        .zip(adjusted)
        .map(|(e, q)| row(dataset, e, q, aggregate.mean_rank[e.outcome], aggregate.pct_top[e.outcome]))
        .collect();

    Ok(AnalysisReport {
        method: Method::Adaptive,
        config,
        fingerprint: DatasetFingerprint::of(dataset),
        rows,
        fold_plan: Some(plan),
    })
}

/// Whole-sample test of every outcome with BH over all `p` hypotheses.
///
/// Rows are ordered by whole-sample absolute effect (reported as the
/// single-fold rank); every outcome counts as selected, so `pct_top = 100`.
pub fn run_naive(dataset: &Dataset, alpha: f64) -> Result<AnalysisReport, PipelineError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(ConfigError::InvalidAlpha { alpha }.into());
    }
    let all: Vec<usize> = (0..dataset.n()).collect();
    let effects = fold_effect_sizes(dataset, &all).map_err(|source| PipelineError::Screen { fold: 1, source })?;
    let screened = rank_fold(1, effects, Direction::Absolute, dataset.p())
        .map_err(|source| PipelineError::Screen { fold: 1, source })?;

    let estimate = |j: usize| -> Result<EffectEstimate, PipelineError> {
        let wrap = |source| PipelineError::Estimate { outcome: j, source };
        let fe = fold_ate(dataset, j, 1, &all).map_err(wrap)?;
        pool_effect(core::slice::from_ref(&fe), dataset.n()).map_err(wrap)
    };
    let estimates = map_outcomes(&screened.selected, estimate)?;

    let raw: Vec<f64> = estimates.iter().map(|e| e.p_value).collect();
    let adjusted = bh_adjust(&raw)?.adjusted;
    let rows = estimates
        .iter()
        .zip(adjusted)
        .map(|(e, q)| row(dataset, e, q, screened.ranks[e.outcome] as f64, 100.0))
        .collect();

    Ok(AnalysisReport {
        method: Method::Naive,
        config: AnalysisConfig {
            folds: 1,
            p_star: dataset.p(),
            direction: Direction::Absolute,
            alpha,
            seed: 0,
        },
        fingerprint: DatasetFingerprint::of(dataset),
        rows,
        fold_plan: None,
    })
}

/// `(rank, adjusted_p)` with adjusted p-values ascending and 1-based rank.
pub fn sorted_adjusted_series(report: &AnalysisReport) -> Vec<(usize, f64)> {
    let mut q: Vec<f64> = report.rows.iter().map(|r| r.adjusted_p).collect();
    q.sort_by(f64::total_cmp);
    q.into_iter().enumerate().map(|(i, v)| (i + 1, v)).collect()
}

fn row(dataset: &Dataset, e: &EffectEstimate, adjusted_p: f64, mean_cv_rank: f64, pct_top: f64) -> ReportRow {
    ReportRow {
        outcome: e.outcome,
        name: dataset.name(e.outcome).into(),
        ate: e.ate,
        raw_p: e.p_value,
        adjusted_p,
        mean_cv_rank,
        pct_top,
        z_stat: e.z_stat,
        eic_variance: e.eic_variance,
        degenerate: e.degenerate,
    }
}

/// Applies `f` to every outcome in order; parallel across outcomes when the
/// `parallel` feature is on. The first error in outcome order wins.
fn map_outcomes<F>(outcomes: &[usize], f: F) -> Result<Vec<EffectEstimate>, PipelineError>
where
    F: Fn(usize) -> Result<EffectEstimate, PipelineError> + Sync,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let results: Vec<_> = outcomes.par_iter().map(|&j| f(j)).collect();
        results.into_iter().collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        outcomes.iter().map(|&j| f(j)).collect()
    }
}
