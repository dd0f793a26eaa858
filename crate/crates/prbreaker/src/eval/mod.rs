//! Evaluation protocol: splits, exact rank metrics with bootstrap CIs,
//! calibration, strata, and permutation importance, plus the report
//! directory format every run emits.

pub mod bootstrap;
pub mod importance;
pub mod metrics;
pub mod report;
pub mod splits;

pub use bootstrap::{bootstrap_ci, ConfidenceInterval};
pub use importance::permutation_importance;
pub use metrics::{
    budget_metrics, calibration_curve, ecdf, pr_auc, roc_auc, roc_curve, spearman, topk_coverage,
    BudgetMetrics, CalibrationBin,
};
pub use report::EvalReport;
pub use splits::{
    loao_folds, random_split, repo_disjoint_split, size_quartile_strata, temporal_split, LoaoFold,
    SplitKind, SplitSpec,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("scores ({scores}) and labels ({labels}) differ in length")]
    LengthMismatch { scores: usize, labels: usize },
    #[error("empty input")]
    Empty,
    #[error("both classes are required")]
    SingleClass,
    #[error("at least one positive label is required")]
    NoPositives,
    #[error("scores contain a non-finite value")]
    NonFiniteScore,
    #[error("{skipped} of {total} bootstrap resamples were degenerate")]
    DegenerateBootstrap { skipped: usize, total: usize },
    #[error("cannot split {n} records {why}")]
    BadSplit { n: usize, why: String },
    #[error("invalid fraction {0}, expected a value in (0,1)")]
    BadFraction(f64),
    #[error("report io: {0}")]
    Io(#[from] std::io::Error),
    #[error("report format: {0}")]
    Format(String),
}
