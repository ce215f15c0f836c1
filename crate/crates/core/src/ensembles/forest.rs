use ndarray::{Array2, ArrayView2};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_labels, EnsembleError};
use crate::cart::{fit_cart, predict_cart, CartError, DecisionTree, Targets, TreeParams};
use crate::seed;
use crate::stats::argmax;

/// Features considered at each node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSampling {
    /// `⌈√D⌉` features.
    Sqrt,
    All,
    Count(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub tree: TreeParams,
    pub max_features: FeatureSampling,
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 200,
            tree: TreeParams::gini(6),
            max_features: FeatureSampling::Sqrt,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub n_classes: usize,
    pub n_features: usize,
    pub trees: Vec<DecisionTree>,
    /// Bootstrap seed of each tree; `bootstrap_counts(n, seed)` replays it.
    pub seeds: Vec<u64>,
    pub bootstrap: bool,
}

/// How many times each of `n` rows is drawn in `n` draws with replacement.
pub fn bootstrap_counts(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = seed::rng(seed);
    let mut counts = vec![0.0; n];
    for _ in 0..n {
        counts[rng.random_range(0..n)] += 1.0;
    }
    counts
}

pub fn fit_forest(
    x: ArrayView2<f64>,
    y: &[usize],
    n_classes: usize,
    params: &ForestParams,
    seed: u64,
) -> Result<ForestModel, EnsembleError> {
    check_labels(y, n_classes, x.nrows())?;
    if params.n_trees == 0 {
        return Err(EnsembleError::Params("a forest needs at least one tree".into()));
    }
    let d = x.ncols();
    let tree_params = TreeParams {
        feature_subsample: match params.max_features {
            FeatureSampling::Sqrt => Some((d as f64).sqrt().ceil() as usize),
            FeatureSampling::All => None,
            FeatureSampling::Count(m) => Some(m),
        },
        ..params.tree.clone()
    };
    let seeds: Vec<u64> = (0..params.n_trees).map(|t| seed::derive(seed, t as u64)).collect();
    let targets = Targets::Classes { labels: y, n_classes };
    let trees: Result<Vec<DecisionTree>, CartError> = seeds
        .par_iter()
        .map(|&s| {
            let weights = if params.bootstrap {
                bootstrap_counts(x.nrows(), s)
            } else {
                vec![1.0; x.nrows()]
            };
            fit_cart(x, targets, &weights, &tree_params, seed::derive(s, 0))
        })
        .collect();
    Ok(ForestModel {
        n_classes,
        n_features: d,
        trees: trees?,
        seeds,
        bootstrap: params.bootstrap,
    })
}

impl ForestModel {
    /// Training rows never drawn for tree `t` (empty without bootstrap).
    pub fn out_of_bag(&self, t: usize, n_rows: usize) -> Vec<usize> {
        if !self.bootstrap {
            return Vec::new();
        }
        bootstrap_counts(n_rows, self.seeds[t])
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == 0.0)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Mean of the trees' leaf probability vectors.
pub fn predict_forest(model: &ForestModel, x: ArrayView2<f64>) -> Result<(Vec<usize>, Array2<f64>), CartError> {
    if x.ncols() != model.n_features {
        return Err(CartError::Dimension { expected: model.n_features, found: x.ncols() });
    }
    let per_tree: Result<Vec<Array2<f64>>, CartError> =
        model.trees.par_iter().map(|t| predict_cart(t, x)).collect();
    let mut p = Array2::zeros((x.nrows(), model.n_classes));
    for tp in per_tree? {
        p += &tp;
    }
    p /= model.trees.len() as f64;
    let labels = p.outer_iter().map(|r| argmax(r.as_slice().unwrap())).collect();
    Ok((labels, p))
}
