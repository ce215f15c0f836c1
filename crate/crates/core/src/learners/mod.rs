//! Non-tree base models: a ReLU multilayer perceptron and brute-force
//! k-nearest neighbours.

mod knn;
mod mlp;

pub use knn::{fit_knn, predict_knn, KnnModel, KnnParams};
pub use mlp::{
    gradient_check, init_mlp, predict_mlp, train_mlp, train_mlp_scheduled, Layer, MlpModel, MlpParams,
    TrainOptions,
};

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum LearnerError {
    #[error("invalid architecture: {0}")]
    Architecture(String),
    #[error("{0}")]
    Params(String),
    #[error("expected {expected} features, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("{what} has {found} entries, expected {expected}")]
    Length {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("label {label} out of range for {n_classes} classes")]
    Label { label: usize, n_classes: usize },
    #[error("training loss became NaN in epoch {epoch}; the learning rate is probably too high")]
    NanLoss { epoch: usize },
    #[error("k = {k} exceeds the {n_train} training rows")]
    KTooLarge { k: usize, n_train: usize },
}

pub(crate) fn check_labels(y: &[usize], n_classes: usize, n_rows: usize) -> Result<(), LearnerError> {
    if y.len() != n_rows {
        return Err(LearnerError::Length { what: "labels", expected: n_rows, found: y.len() });
    }
    if let Some(&label) = y.iter().find(|&&l| l >= n_classes) {
        return Err(LearnerError::Label { label, n_classes });
    }
    Ok(())
}
