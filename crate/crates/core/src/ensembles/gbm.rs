use ndarray::{Array2, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_labels, EnsembleError};
use crate::cart::{fit_cart, predict_cart, CartError, DecisionTree, Targets, TreeParams};
use crate::seed;
use crate::stats::{argmax, softmax_in_place};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbmParams {
    pub rounds: usize,
    pub learning_rate: f64,
    pub tree: TreeParams,
}

impl Default for GbmParams {
    fn default() -> Self {
        Self {
            rounds: 200,
            learning_rate: 0.1,
            tree: TreeParams::mse(3),
        }
    }
}

/// Stagewise softmax model: `F_k(x) = init_k + lr · Σ_rounds tree_{round,k}(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbmModel {
    pub n_classes: usize,
    pub n_features: usize,
    /// `ln(prior_k + 1e−12)`.
    pub init_scores: Vec<f64>,
    /// One regression tree per class per round.
    pub stages: Vec<Vec<DecisionTree>>,
    pub learning_rate: f64,
}

pub fn fit_gbm(
    x: ArrayView2<f64>,
    y: &[usize],
    n_classes: usize,
    params: &GbmParams,
    seed: u64,
) -> Result<GbmModel, EnsembleError> {
    fit_gbm_traced(x, y, n_classes, params, seed).map(|(m, _)| m)
}

/// Mean training cross-entropy of softmax scores `f` against `y`.
pub fn cross_entropy(f: &Array2<f64>, y: &[usize]) -> f64 {
    let total: f64 = f
        .outer_iter()
        .zip(y)
        .map(|(row, &label)| {
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            lse - row[label]
        })
        .sum();
    total / y.len() as f64
}

/// Fits the model and returns the training cross-entropy before the first
/// round followed by its value after every round.
///
/// Leaves hold the weighted mean residual `onehot − p` (no Newton refit).
pub fn fit_gbm_traced(
    x: ArrayView2<f64>,
    y: &[usize],
    n_classes: usize,
    params: &GbmParams,
    seed: u64,
) -> Result<(GbmModel, Vec<f64>), EnsembleError> {
    check_labels(y, n_classes, x.nrows())?;
    if params.rounds == 0 {
        return Err(EnsembleError::Params("gradient boosting needs at least one round".into()));
    }
    if !(params.learning_rate > 0.0 && params.learning_rate <= 1.0) {
        return Err(EnsembleError::Params(format!(
            "learning rate {} outside (0, 1]",
            params.learning_rate
        )));
    }
    let n = x.nrows();
    let mut counts = vec![0.0; n_classes];
    for &l in y {
        counts[l] += 1.0;
    }
    let init_scores: Vec<f64> = counts.iter().map(|c| (c / n as f64 + 1e-12).ln()).collect();
    let mut f = Array2::from_shape_fn((n, n_classes), |(_, k)| init_scores[k]);
    let weights = vec![1.0; n];
    let mut trace = vec![cross_entropy(&f, y)];
    let mut stages = Vec::with_capacity(params.rounds);

    for round in 0..params.rounds {
        let mut p = f.clone();
        p.axis_iter_mut(Axis(0))
            .for_each(|mut row| softmax_in_place(row.as_slice_mut().expect("standard layout")));
        let fitted: Result<Vec<(DecisionTree, Array2<f64>)>, CartError> = (0..n_classes)
            .into_par_iter()
            .map(|k| {
                let residual: Vec<f64> = (0..n)
                    .map(|i| (if y[i] == k { 1.0 } else { 0.0 }) - p[[i, k]])
                    .collect();
                let tree_seed = seed::derive(seed, (round * n_classes + k) as u64);
                let tree = fit_cart(x, Targets::Values(&residual), &weights, &params.tree, tree_seed)?;
                let step = predict_cart(&tree, x)?;
                Ok((tree, step))
            })
            .collect();
        let mut round_trees = Vec::with_capacity(n_classes);
        for (k, (tree, step)) in fitted?.into_iter().enumerate() {
            f.column_mut(k)
                .zip_mut_with(&step.column(0), |fv, s| *fv += params.learning_rate * s);
            round_trees.push(tree);
        }
        stages.push(round_trees);
        trace.push(cross_entropy(&f, y));
    }
    Ok((
        GbmModel {
            n_classes,
            n_features: x.ncols(),
            init_scores,
            stages,
            learning_rate: params.learning_rate,
        },
        trace,
    ))
}

impl GbmModel {
    /// Raw additive scores `F`.
    pub fn decision_function(&self, x: ArrayView2<f64>) -> Result<Array2<f64>, CartError> {
        if x.ncols() != self.n_features {
            return Err(CartError::Dimension { expected: self.n_features, found: x.ncols() });
        }
        let mut f = Array2::from_shape_fn((x.nrows(), self.n_classes), |(_, k)| self.init_scores[k]);
        for round in &self.stages {
            for (k, tree) in round.iter().enumerate() {
                let step = predict_cart(tree, x)?;
                f.column_mut(k)
                    .zip_mut_with(&step.column(0), |fv, s| *fv += self.learning_rate * s);
            }
        }
        Ok(f)
    }
}

pub fn predict_gbm(model: &GbmModel, x: ArrayView2<f64>) -> Result<(Vec<usize>, Array2<f64>), CartError> {
    let mut p = model.decision_function(x)?;
    p.axis_iter_mut(Axis(0))
        .for_each(|mut row| softmax_in_place(row.as_slice_mut().expect("standard layout")));
    let labels = p.outer_iter().map(|r| argmax(r.as_slice().unwrap())).collect();
    Ok((labels, p))
}
