//! Tree ensembles: multiclass AdaBoost (SAMME), softmax gradient boosting
//! and bagged random forests.

mod adaboost;
mod forest;
mod gbm;

pub use adaboost::{
    fit_adaboost, fit_adaboost_observed, predict_adaboost, AdaBoostModel, AdaBoostParams, BoostRound,
    Stage, MAX_ALPHA,
};
pub use forest::{bootstrap_counts, fit_forest, predict_forest, FeatureSampling, ForestModel, ForestParams};
pub use gbm::{cross_entropy, fit_gbm, fit_gbm_traced, predict_gbm, GbmModel, GbmParams};

use crate::cart::CartError;

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum EnsembleError {
    #[error("training labels contain a single class")]
    SingleClass,
    #[error("{0}")]
    Params(String),
    #[error("the first weak learner already fails the weak-learning bound (error {0})")]
    NoUsefulStage(f64),
    #[error(transparent)]
    Cart(#[from] CartError),
}

pub(crate) fn check_labels(y: &[usize], n_classes: usize, n_rows: usize) -> Result<(), EnsembleError> {
    if y.len() != n_rows {
        return Err(CartError::Length { what: "labels", expected: n_rows, found: y.len() }.into());
    }
    if let Some(&label) = y.iter().find(|&&l| l >= n_classes) {
        return Err(CartError::Label { label, n_classes }.into());
    }
    if n_classes < 2 || y.iter().all(|&l| l == y[0]) {
        return Err(EnsembleError::SingleClass);
    }
    Ok(())
}
