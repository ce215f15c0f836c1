use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_labels, LearnerError};
use crate::stats::argmax;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnParams {
    pub k: usize,
}

impl Default for KnnParams {
    fn default() -> Self {
        Self { k: 15 }
    }
}

/// Exact Euclidean k-nearest-neighbour classifier over stored rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub x: Array2<f64>,
    pub y: Vec<usize>,
    pub n_classes: usize,
    pub k: usize,
}

pub fn fit_knn(x: ArrayView2<f64>, y: &[usize], n_classes: usize, k: usize) -> Result<KnnModel, LearnerError> {
    check_labels(y, n_classes, x.nrows())?;
    if k == 0 {
        return Err(LearnerError::Params("k must be >= 1".into()));
    }
    if k > x.nrows() {
        return Err(LearnerError::KTooLarge { k, n_train: x.nrows() });
    }
    Ok(KnnModel {
        x: x.to_owned(),
        y: y.to_vec(),
        n_classes,
        k,
    })
}

impl KnnModel {
    /// Indices of the `k` nearest training rows, nearest first; equal
    /// distances are ordered by training-row index.
    pub fn neighbors(&self, query: &[f64]) -> Vec<usize> {
        let mut d: Vec<(f64, usize)> = self
            .x
            .outer_iter()
            .enumerate()
            .map(|(i, row)| {
                let dist: f64 = row.iter().zip(query).map(|(a, b)| (a - b) * (a - b)).sum();
                (dist, i)
            })
            .collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < d.len() {
            d.select_nth_unstable_by(self.k - 1, cmp);
            d.truncate(self.k);
        }
        d.sort_unstable_by(cmp);
        d.into_iter().map(|(_, i)| i).collect()
    }
}

/// Majority vote (lowest class index on ties); probabilities are the
/// neighbours' class frequencies.
pub fn predict_knn(model: &KnnModel, x: ArrayView2<f64>) -> Result<(Vec<usize>, Array2<f64>), LearnerError> {
    if x.ncols() != model.x.ncols() {
        return Err(LearnerError::Dimension { expected: model.x.ncols(), found: x.ncols() });
    }
    let rows: Vec<Vec<f64>> = x
        .outer_iter()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|q| {
            let q: Vec<f64> = q.to_vec();
            let mut freq = vec![0.0; model.n_classes];
            for i in model.neighbors(&q) {
                freq[model.y[i]] += 1.0;
            }
            freq.iter_mut().for_each(|f| *f /= model.k as f64);
            freq
        })
        .collect();
    let mut p = Array2::zeros((x.nrows(), model.n_classes));
    let mut labels = Vec::with_capacity(rows.len());
    for (i, r) in rows.into_iter().enumerate() {
        labels.push(argmax(&r));
        p.row_mut(i).assign(&ndarray::ArrayView1::from(&r));
    }
    Ok((labels, p))
}
