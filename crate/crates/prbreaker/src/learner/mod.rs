//! Models: the main gradient-boosted tree classifier and two reproducible
//! linear baselines (size-only, path-token TF-IDF).
//!
//! Everything trains deterministically: one seed, any thread count, same
//! bytes out. The GBDT parallelizes split search across features with a
//! fixed reduction order; the linear models are plain IRLS with a dense
//! Cholesky solve.

pub mod gbdt;
pub mod linear;
pub mod model_io;

pub use gbdt::{train_gbdt, GbdtModel, GbdtParams, Node, Tree};
pub use linear::{
    train_logistic, train_path_token_baseline, train_size_only, LinearModel, PathTokenModel,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LearnerError {
    #[error("labels contain a single class; both classes are required")]
    SingleClass,
    #[error("non-finite feature value at row {row}, column {column}")]
    NonFinite { row: usize, column: String },
    #[error("training set too small: {rows} rows, need at least {min}")]
    TooSmall { rows: usize, min: usize },
    #[error("rows ({rows}) and labels ({labels}) differ in length")]
    ShapeMismatch { rows: usize, labels: usize },
    #[error("invalid params: {0}")]
    InvalidParams(String),
    #[error("schema hash mismatch: model was trained on {model}, input has {matrix}")]
    SchemaMismatch { model: String, matrix: String },
    #[error("model file: {0}")]
    ModelFormat(String),
    #[error("path-token vocabulary is empty after the min-df filter")]
    EmptyVocabulary,
    #[error("solver failed: {0}")]
    Solver(String),
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Binary logistic loss for one example with raw score `f`.
pub(crate) fn logistic_loss(f: f64, y: f64) -> f64 {
    // ln(1 + e^f) - y f, computed stably on both tails.
    let softplus = if f > 0.0 {
        f + (-f).exp().ln_1p()
    } else {
        f.exp().ln_1p()
    };
    softplus - y * f
}

/// First and second derivatives of the logistic loss in the raw score.
pub(crate) fn logistic_grad_hess(f: f64, y: f64) -> (f64, f64) {
    let p = sigmoid(f);
    (p - y, p * (1.0 - p))
}

pub(crate) fn check_labels(labels: &[bool]) -> Result<(), LearnerError> {
    let positives = labels.iter().filter(|&&l| l).count();
    if positives == 0 || positives == labels.len() {
        return Err(LearnerError::SingleClass);
    }
    Ok(())
}
