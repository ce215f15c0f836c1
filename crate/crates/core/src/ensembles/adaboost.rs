use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::{check_labels, EnsembleError};
use crate::cart::{fit_cart, predict_labels, CartError, DecisionTree, Targets, TreeParams};
use crate::seed;
use crate::stats::argmax;

/// Stage weight used when a learner classifies every training row correctly.
pub const MAX_ALPHA: f64 = 27.631_021_115_928_547; // ln(1e12)

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoostParams {
    pub rounds: usize,
    pub tree: TreeParams,
}

impl Default for AdaBoostParams {
    fn default() -> Self {
        Self {
            rounds: 200,
            tree: TreeParams::gini(2),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub tree: DecisionTree,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoostModel {
    pub n_classes: usize,
    pub stages: Vec<Stage>,
}

/// What happened in one accepted boosting round.
#[derive(Debug)]
pub struct BoostRound<'a> {
    pub round: usize,
    /// Weighted training error of the new learner before the update.
    pub error: f64,
    pub alpha: f64,
    /// The new learner's predictions on the training rows.
    pub predictions: &'a [usize],
    /// Sample weights after the update and renormalization.
    pub weights: &'a [f64],
}

pub fn fit_adaboost(
    x: ArrayView2<f64>,
    y: &[usize],
    n_classes: usize,
    params: &AdaBoostParams,
    seed: u64,
) -> Result<AdaBoostModel, EnsembleError> {
    fit_adaboost_observed(x, y, n_classes, params, seed, |_| {})
}

/// SAMME boosting. Weights start uniform; a round whose weighted error
/// reaches `1 − 1/K` is discarded and ends training; a perfect round is kept
/// with `alpha = ln(1e12)` and ends training.
pub fn fit_adaboost_observed(
    x: ArrayView2<f64>,
    y: &[usize],
    n_classes: usize,
    params: &AdaBoostParams,
    seed: u64,
    mut observe: impl FnMut(BoostRound<'_>),
) -> Result<AdaBoostModel, EnsembleError> {
    check_labels(y, n_classes, x.nrows())?;
    if params.rounds == 0 {
        return Err(EnsembleError::Params("AdaBoost needs at least one round".into()));
    }
    let n = x.nrows();
    let k = n_classes as f64;
    let mut w = vec![1.0 / n as f64; n];
    let mut stages = Vec::new();
    let targets = Targets::Classes { labels: y, n_classes };

    for round in 0..params.rounds {
        let tree = fit_cart(x, targets, &w, &params.tree, seed::derive(seed, round as u64))?;
        let pred = predict_labels(&tree, x)?;
        let error: f64 = (0..n).filter(|&i| pred[i] != y[i]).map(|i| w[i]).sum();
        if error >= 1.0 - 1.0 / k {
            if stages.is_empty() {
                return Err(EnsembleError::NoUsefulStage(error));
            }
            break;
        }
        if error <= 0.0 {
            stages.push(Stage { tree, alpha: MAX_ALPHA });
            observe(BoostRound { round, error, alpha: MAX_ALPHA, predictions: &pred, weights: &w });
            break;
        }
        let alpha = ((1.0 - error) / error).ln() + (k - 1.0).ln();
        let boost = alpha.exp();
        for i in 0..n {
            if pred[i] != y[i] {
                w[i] *= boost;
            }
        }
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= total);
        stages.push(Stage { tree, alpha });
        observe(BoostRound { round, error, alpha, predictions: &pred, weights: &w });
    }
    Ok(AdaBoostModel { n_classes, stages })
}

/// Labels and stage-vote scores normalized by the total alpha, so every row
/// lies on the probability simplex.
pub fn predict_adaboost(
    model: &AdaBoostModel,
    x: ArrayView2<f64>,
) -> Result<(Vec<usize>, Array2<f64>), CartError> {
    let mut scores = Array2::zeros((x.nrows(), model.n_classes));
    for stage in &model.stages {
        for (i, label) in predict_labels(&stage.tree, x)?.into_iter().enumerate() {
            scores[[i, label]] += stage.alpha;
        }
    }
    let labels = scores
        .outer_iter()
        .map(|r| argmax(r.as_slice().expect("standard layout")))
        .collect();
    let total: f64 = model.stages.iter().map(|s| s.alpha).sum();
    scores.mapv_inplace(|s| s / total);
    Ok((labels, scores))
}
