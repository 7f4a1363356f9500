//! Data-adaptive multiple hypothesis testing for high-dimensional outcomes.
//!
//! The procedure screens every outcome column by its treatment effect on the
//! parameter-generating part of each cross-validation fold, keeps the `p_star`
//! outcomes with the best mean rank, estimates their average treatment effects
//! on the held-out estimation samples with influence-curve based standard
//! errors, and finally applies Benjamini-Hochberg to the reduced set.
//!
//! The crate is `no_std` (it needs `alloc`). Enable the `parallel` feature to
//! spread column work over a rayon pool; results do not depend on the number
//! of workers.

#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod ate;
pub mod cv;
pub mod fdr;
pub mod model;
pub mod pipeline;
pub mod screening;
pub mod sim;
mod sum;

pub use ate::{fold_ate, normal_p, pool_effect, EstimationError, FoldEffect, PooledEffect};
pub use cv::{assign_folds, FoldError, FoldPlan, FoldView};
pub use fdr::{bh_adjust, reject_at, AdjustedPValues, FdrError};
pub use model::{
    validate_dataset, AnalysisConfig, ConfigError, Dataset, DatasetError, Direction,
    EffectEstimate, OutcomeMatrix, ReportRow,
};
pub use pipeline::{
    run_adaptive, run_adaptive_audited, run_adaptive_with_plan, run_naive, sorted_adjusted_series, AnalysisReport,
    DatasetFingerprint, Method, PipelineError,
};
pub use screening::{
    aggregate_ranks, fold_effect_sizes, rank_fold, FoldScreenResult, RankAccumulator,
    RankAggregate, ScreenError,
};
pub use sim::{generate, SimData, SimDesign, SimError};
