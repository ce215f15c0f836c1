//! One configuration type and one trained-model type covering every
//! classifier in the crate.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::cart::{fit_cart, predict_cart, CartError, DecisionTree, Targets, TreeParams};
use crate::ensembles::{
    fit_adaboost, fit_forest, fit_gbm, predict_adaboost, predict_forest, predict_gbm, AdaBoostModel,
    AdaBoostParams, EnsembleError, ForestModel, ForestParams, GbmModel, GbmParams,
};
use crate::learners::{
    fit_knn, init_mlp, predict_knn, predict_mlp, train_mlp, KnnModel, KnnParams, LearnerError, MlpModel,
    MlpParams,
};
use crate::seed;
use crate::stacking::{predict_stacking, StackingModel};
use crate::stats::argmax;

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum ModelError {
    #[error(transparent)]
    Cart(#[from] CartError),
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error("training rows outside fold {fold} contain no example of class {class}")]
    MissingClass { fold: usize, class: usize },
    #[error("invalid stacking spec: {0}")]
    Spec(String),
    #[error("cannot read model: {0}")]
    Persist(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelConfig {
    Cart(TreeParams),
    AdaBoost(AdaBoostParams),
    Gbm(GbmParams),
    Forest(ForestParams),
    Mlp(MlpParams),
    Knn(KnnParams),
}

impl ModelConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ModelConfig::Cart(_) => "cart",
            ModelConfig::AdaBoost(_) => "ada_boost",
            ModelConfig::Gbm(_) => "gradient_boosting",
            ModelConfig::Forest(_) => "random_forest",
            ModelConfig::Mlp(_) => "neural_network",
            ModelConfig::Knn(_) => "knn",
        }
    }

    pub fn fit(&self, x: ArrayView2<f64>, y: &[usize], n_classes: usize, seed: u64) -> Result<TrainedModel, ModelError> {
        Ok(match self {
            ModelConfig::Cart(p) => {
                if let Some(&label) = y.iter().find(|&&l| l >= n_classes) {
                    return Err(CartError::Label { label, n_classes }.into());
                }
                let w = vec![1.0; x.nrows()];
                TrainedModel::Cart(fit_cart(x, Targets::Classes { labels: y, n_classes }, &w, p, seed)?)
            }
            ModelConfig::AdaBoost(p) => TrainedModel::AdaBoost(fit_adaboost(x, y, n_classes, p, seed)?),
            ModelConfig::Gbm(p) => TrainedModel::Gbm(fit_gbm(x, y, n_classes, p, seed)?),
            ModelConfig::Forest(p) => TrainedModel::Forest(fit_forest(x, y, n_classes, p, seed)?),
            ModelConfig::Mlp(p) => {
                let mut sizes = vec![x.ncols()];
                sizes.extend(&p.hidden);
                sizes.push(n_classes);
                let init = init_mlp(&sizes, seed::derive(seed, 0))?;
                let (m, _) = train_mlp(&init, x, y, &p.train_options(), seed::derive(seed, 1))?;
                TrainedModel::Mlp(m)
            }
            ModelConfig::Knn(p) => TrainedModel::Knn(fit_knn(x, y, n_classes, p.k)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "model", rename_all = "snake_case")]
pub enum TrainedModel {
    Cart(DecisionTree),
    AdaBoost(AdaBoostModel),
    Gbm(GbmModel),
    Forest(ForestModel),
    Mlp(MlpModel),
    Knn(KnnModel),
    Stacking(Box<StackingModel>),
}

impl TrainedModel {
    pub fn n_classes(&self) -> usize {
        match self {
            TrainedModel::Cart(t) => t.leaf_width(),
            TrainedModel::AdaBoost(m) => m.n_classes,
            TrainedModel::Gbm(m) => m.n_classes,
            TrainedModel::Forest(m) => m.n_classes,
            TrainedModel::Mlp(m) => m.n_classes(),
            TrainedModel::Knn(m) => m.n_classes,
            TrainedModel::Stacking(m) => m.n_classes,
        }
    }

    /// Predicted labels and one probability (or normalized score) row per input.
    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Result<(Vec<usize>, Array2<f64>), ModelError> {
        Ok(match self {
            TrainedModel::Cart(t) => {
                let p = predict_cart(t, x)?;
                let labels = p.outer_iter().map(|r| argmax(r.as_slice().unwrap())).collect();
                (labels, p)
            }
            TrainedModel::AdaBoost(m) => predict_adaboost(m, x)?,
            TrainedModel::Gbm(m) => predict_gbm(m, x)?,
            TrainedModel::Forest(m) => predict_forest(m, x)?,
            TrainedModel::Mlp(m) => predict_mlp(m, x)?,
            TrainedModel::Knn(m) => predict_knn(m, x)?,
            TrainedModel::Stacking(m) => predict_stacking(m, x)?,
        })
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<usize>, ModelError> {
        self.predict_proba(x).map(|(labels, _)| labels)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("models serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        serde_json::from_str(text).map_err(|e| ModelError::Persist(e.to_string()))
    }
}
