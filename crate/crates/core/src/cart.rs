//! Weighted CART trees: Gini classification and squared-error regression.
//!
//! Trees are grown depth-first with the best split at every node. Candidate
//! thresholds are midpoints between consecutive distinct feature values; a
//! row goes left when `x <= threshold`. Among splits of equal quality the
//! lowest feature index wins, then the lowest threshold.

use ndarray::{Array2, ArrayView2};
use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::seed;
use crate::stats::argmax;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Gini,
    Mse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub criterion: Criterion,
    /// Number of features drawn (without replacement) at every node.
    pub feature_subsample: Option<usize>,
}

impl TreeParams {
    pub fn gini(max_depth: usize) -> Self {
        Self {
            max_depth,
            min_samples_leaf: 1,
            criterion: Criterion::Gini,
            feature_subsample: None,
        }
    }

    pub fn mse(max_depth: usize) -> Self {
        Self {
            criterion: Criterion::Mse,
            ..Self::gini(max_depth)
        }
    }
}

impl Default for TreeParams {
    fn default() -> Self {
        Self::gini(6)
    }
}

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum CartError {
    #[error("empty training set")]
    Empty,
    #[error("{what} has {found} entries, expected {expected}")]
    Length {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("NaN in input at row {row}, column {col}")]
    NaN { row: usize, col: usize },
    #[error("sample weights must be non-negative with a positive sum")]
    Weights,
    #[error("label {label} out of range for {n_classes} classes")]
    Label { label: usize, n_classes: usize },
    #[error("invalid tree parameters: {0}")]
    Params(String),
    #[error("expected {expected} features, found {found}")]
    Dimension { expected: usize, found: usize },
}

/// Training targets: class labels for Gini trees, real values for MSE trees.
#[derive(Debug, Clone, Copy)]
pub enum Targets<'a> {
    Classes { labels: &'a [usize], n_classes: usize },
    Values(&'a [f64]),
}

impl Targets<'_> {
    fn len(&self) -> usize {
        match self {
            Targets::Classes { labels, .. } => labels.len(),
            Targets::Values(v) => v.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    /// Class probabilities (Gini) or a one-element mean (MSE).
    Leaf { value: Vec<f64> },
}

/// Nodes stored in preorder; the root is `nodes[0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub n_features: usize,
    pub criterion: Criterion,
    pub nodes: Vec<Node>,
}

/// `1 − Σ p_k²` of a weighted class-mass vector.
pub fn gini_impurity(mass: &[f64]) -> Result<f64, CartError> {
    if mass.iter().any(|&m| m < 0.0) {
        return Err(CartError::Weights);
    }
    let total: f64 = mass.iter().sum();
    if total <= 0.0 {
        return Err(CartError::Weights);
    }
    Ok(1.0 - mass.iter().map(|m| (m / total) * (m / total)).sum::<f64>())
}

pub fn fit_cart(
    x: ArrayView2<f64>,
    targets: Targets<'_>,
    weights: &[f64],
    params: &TreeParams,
    seed: u64,
) -> Result<DecisionTree, CartError> {
    let n = x.nrows();
    if n == 0 || x.ncols() == 0 {
        return Err(CartError::Empty);
    }
    if targets.len() != n {
        return Err(CartError::Length { what: "targets", expected: n, found: targets.len() });
    }
    if weights.len() != n {
        return Err(CartError::Length { what: "weights", expected: n, found: weights.len() });
    }
    if params.max_depth < 1 || params.min_samples_leaf < 1 {
        return Err(CartError::Params("max_depth and min_samples_leaf must be >= 1".into()));
    }
    if params.feature_subsample == Some(0) {
        return Err(CartError::Params("feature_subsample must be >= 1".into()));
    }
    match (params.criterion, targets) {
        (Criterion::Gini, Targets::Classes { labels, n_classes }) => {
            if let Some(&label) = labels.iter().find(|&&l| l >= n_classes) {
                return Err(CartError::Label { label, n_classes });
            }
        }
        (Criterion::Mse, Targets::Values(v)) => {
            if let Some(row) = v.iter().position(|t| t.is_nan()) {
                return Err(CartError::NaN { row, col: x.ncols() });
            }
        }
        _ => return Err(CartError::Params("criterion does not match target kind".into())),
    }
    if let Some(((row, col), _)) = x.indexed_iter().find(|(_, v)| v.is_nan()) {
        return Err(CartError::NaN { row, col });
    }
    if weights.iter().any(|&w| !(w >= 0.0)) || weights.iter().sum::<f64>() <= 0.0 {
        return Err(CartError::Weights);
    }

    let mut rows: Vec<usize> = (0..n).filter(|&i| weights[i] > 0.0).collect();
    let mut builder = Builder {
        x,
        targets,
        weights,
        params,
        rng: seed::rng(seed),
        nodes: Vec::new(),
        scratch: Vec::with_capacity(rows.len()),
    };
    builder.grow(&mut rows, 0);
    Ok(DecisionTree {
        n_features: x.ncols(),
        criterion: params.criterion,
        nodes: builder.nodes,
    })
}

struct Builder<'a> {
    x: ArrayView2<'a, f64>,
    targets: Targets<'a>,
    weights: &'a [f64],
    params: &'a TreeParams,
    rng: rand_chacha::ChaCha8Rng,
    nodes: Vec<Node>,
    scratch: Vec<(f64, usize)>,
}

struct Split {
    feature: usize,
    threshold: f64,
    /// Weighted impurity of the children, `W_l·I_l + W_r·I_r`.
    cost: f64,
}

impl Builder<'_> {
    fn grow(&mut self, rows: &mut [usize], depth: usize) -> usize {
        let id = self.nodes.len();
        let (impurity, value) = self.summarize(rows);
        self.nodes.push(Node::Leaf { value });

        let too_small = rows.len() < 2 * self.params.min_samples_leaf;
        if depth >= self.params.max_depth || too_small || impurity <= 1e-12 {
            return id;
        }
        let Some(split) = self.best_split(rows) else {
            return id;
        };
        // partition rows in place, preserving relative order on each side
        let (mut left, mut right): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&r| self.x[[r, split.feature]] <= split.threshold);
        let n_left = left.len();
        let l = self.grow(&mut left, depth + 1);
        let r = self.grow(&mut right, depth + 1);
        debug_assert_eq!(l, id + 1);
        rows[..n_left].copy_from_slice(&left);
        rows[n_left..].copy_from_slice(&right);
        self.nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: l,
            right: r,
        };
        id
    }

    /// Node impurity and leaf value.
    fn summarize(&self, rows: &[usize]) -> (f64, Vec<f64>) {
        match self.targets {
            Targets::Classes { labels, n_classes } => {
                let mut mass = vec![0.0; n_classes];
                for &r in rows {
                    mass[labels[r]] += self.weights[r];
                }
                let total: f64 = mass.iter().sum();
                let impurity = gini_impurity(&mass).unwrap_or(0.0);
                mass.iter_mut().for_each(|m| *m /= total);
                (impurity, mass)
            }
            Targets::Values(y) => {
                let w: f64 = rows.iter().map(|&r| self.weights[r]).sum();
                let mean = rows.iter().map(|&r| self.weights[r] * y[r]).sum::<f64>() / w;
                let var = rows
                    .iter()
                    .map(|&r| self.weights[r] * (y[r] - mean) * (y[r] - mean))
                    .sum::<f64>()
                    / w;
                (var, vec![mean])
            }
        }
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        let d = self.x.ncols();
        match self.params.feature_subsample {
            Some(m) if m < d => {
                let mut f = index::sample(&mut self.rng, d, m).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..d).collect(),
        }
    }

    fn best_split(&mut self, rows: &[usize]) -> Option<Split> {
        let features = self.candidate_features();
        let mut best: Option<Split> = None;
        let mut scratch = std::mem::take(&mut self.scratch);
        for f in features {
            scratch.clear();
            scratch.extend(rows.iter().map(|&r| (self.x[[r, f]], r)));
            scratch.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            if scratch[0].0 == scratch[scratch.len() - 1].0 {
                continue;
            }
            let found = match self.targets {
                Targets::Classes { labels, n_classes } => self.scan_gini(&scratch, labels, n_classes),
                Targets::Values(y) => self.scan_mse(&scratch, y),
            };
            if let Some((threshold, cost)) = found {
                let better = match &best {
                    None => true,
                    Some(b) => cost < b.cost - 1e-12 * b.cost.abs().max(1e-300),
                };
                if better {
                    best = Some(Split { feature: f, threshold, cost });
                }
            }
        }
        self.scratch = scratch;
        best
    }

    fn scan_gini(&self, sorted: &[(f64, usize)], labels: &[usize], k: usize) -> Option<(f64, f64)> {
        let msl = self.params.min_samples_leaf;
        let mut right = vec![0.0; k];
        for &(_, r) in sorted {
            right[labels[r]] += self.weights[r];
        }
        let mut left = vec![0.0; k];
        let mut best: Option<(f64, f64)> = None;
        for i in 0..sorted.len() - 1 {
            let (v, r) = sorted[i];
            let w = self.weights[r];
            left[labels[r]] += w;
            right[labels[r]] -= w;
            let next = sorted[i + 1].0;
            if v == next || i + 1 < msl || sorted.len() - i - 1 < msl {
                continue;
            }
            let cost = weighted_gini(&left) + weighted_gini(&right);
            if best.is_none_or(|(_, c)| cost < c - 1e-12 * c.abs().max(1e-300)) {
                best = Some((midpoint(v, next), cost));
            }
        }
        best
    }

    fn scan_mse(&self, sorted: &[(f64, usize)], y: &[f64]) -> Option<(f64, f64)> {
        let msl = self.params.min_samples_leaf;
        let (mut w_tot, mut s_tot, mut q_tot) = (0.0, 0.0, 0.0);
        for &(_, r) in sorted {
            let w = self.weights[r];
            w_tot += w;
            s_tot += w * y[r];
            q_tot += w * y[r] * y[r];
        }
        let (mut wl, mut sl) = (0.0, 0.0);
        let mut best: Option<(f64, f64)> = None;
        for i in 0..sorted.len() - 1 {
            let (v, r) = sorted[i];
            let w = self.weights[r];
            wl += w;
            sl += w * y[r];
            let next = sorted[i + 1].0;
            if v == next || i + 1 < msl || sorted.len() - i - 1 < msl {
                continue;
            }
            let (wr, sr) = (w_tot - wl, s_tot - sl);
            if wl <= 0.0 || wr <= 0.0 {
                continue;
            }
            let cost = q_tot - sl * sl / wl - sr * sr / wr;
            if best.is_none_or(|(_, c)| cost < c - 1e-12 * c.abs().max(1e-300)) {
                best = Some((midpoint(v, next), cost));
            }
        }
        best
    }
}

/// `W·gini` of a mass vector, i.e. `W − Σ m_k² / W`.
fn weighted_gini(mass: &[f64]) -> f64 {
    let total: f64 = mass.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    total - mass.iter().map(|m| m * m).sum::<f64>() / total
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    // adjacent floats: keep the partition a | b intact
    if m >= b {
        a
    } else {
        m
    }
}

impl DecisionTree {
    pub fn leaf_for(&self, row: &[f64]) -> &[f64] {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                Node::Leaf { value } => return value,
                Node::Split { feature, threshold, left, right } => {
                    id = if row[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    fn check(&self, x: &ArrayView2<f64>) -> Result<(), CartError> {
        if x.ncols() != self.n_features {
            return Err(CartError::Dimension {
                expected: self.n_features,
                found: x.ncols(),
            });
        }
        Ok(())
    }

    pub fn leaf_width(&self) -> usize {
        self.nodes
            .iter()
            .find_map(|n| match n {
                Node::Leaf { value } => Some(value.len()),
                Node::Split { .. } => None,
            })
            .expect("a tree has at least one leaf")
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], id: usize) -> usize {
            match &nodes[id] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("tree serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}

/// Leaf value of every row: class probabilities for Gini trees, a single
/// column of means for MSE trees.
pub fn predict_cart(tree: &DecisionTree, x: ArrayView2<f64>) -> Result<Array2<f64>, CartError> {
    tree.check(&x)?;
    let width = tree.leaf_width();
    let mut out = Array2::zeros((x.nrows(), width));
    let mut buf = Vec::with_capacity(x.ncols());
    for (i, row) in x.outer_iter().enumerate() {
        buf.clear();
        buf.extend(row.iter().copied());
        out.row_mut(i)
            .iter_mut()
            .zip(tree.leaf_for(&buf))
            .for_each(|(o, v)| *o = *v);
    }
    Ok(out)
}

/// Most probable class per row (lowest index on ties).
pub fn predict_labels(tree: &DecisionTree, x: ArrayView2<f64>) -> Result<Vec<usize>, CartError> {
    let p = predict_cart(tree, x)?;
    Ok(p.outer_iter().map(|r| argmax(r.as_slice().unwrap())).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn gini_values() {
        assert_eq!(gini_impurity(&[1.0, 0.0]).unwrap(), 0.0);
        assert_eq!(gini_impurity(&[1.0, 1.0]).unwrap(), 0.5);
        assert_eq!(gini_impurity(&[2.0, 1.0, 1.0]).unwrap(), 0.625);
        assert_eq!(gini_impurity(&[0.0, 0.0]).unwrap_err(), CartError::Weights);
    }

    #[test]
    fn xor_is_depth_two_separable() {
        let x = array![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]];
        let y = [0, 1, 1, 0];
        let t = fit_cart(
            x.view(),
            Targets::Classes { labels: &y, n_classes: 2 },
            &[1.0; 4],
            &TreeParams::gini(2),
            0,
        )
        .unwrap();
        assert_eq!(predict_labels(&t, x.view()).unwrap(), y.to_vec());
    }

    #[test]
    fn depth_one_is_a_stump() {
        let x = array![[0.0], [1.0], [2.0], [3.0], [4.0]];
        let y = [0, 1, 0, 1, 1];
        let t = fit_cart(
            x.view(),
            Targets::Classes { labels: &y, n_classes: 2 },
            &[1.0; 5],
            &TreeParams::gini(1),
            0,
        )
        .unwrap();
        assert_eq!(t.nodes.len(), 3);
        assert_eq!(t.depth(), 1);
    }

    #[test]
    fn ties_route_left() {
        let t = DecisionTree {
            n_features: 1,
            criterion: Criterion::Mse,
            nodes: vec![
                Node::Split { feature: 0, threshold: 1.5, left: 1, right: 2 },
                Node::Leaf { value: vec![-1.0] },
                Node::Leaf { value: vec![1.0] },
            ],
        };
        let p = predict_cart(&t, array![[1.5], [1.50001]].view()).unwrap();
        assert_eq!(p, array![[-1.0], [1.0]]);
    }

    #[test]
    fn single_leaf_is_constant() {
        let x = array![[0.0], [1.0], [2.0]];
        let t = fit_cart(x.view(), Targets::Values(&[2.0, 2.0, 2.0]), &[1.0; 3], &TreeParams::mse(3), 0)
            .unwrap();
        assert_eq!(t.nodes.len(), 1);
        assert_eq!(predict_cart(&t, array![[-5.0], [9.0]].view()).unwrap(), array![[2.0], [2.0]]);
    }

    #[test]
    fn mse_leaf_is_weighted_mean() {
        let x = array![[0.0], [0.0], [0.0]];
        let t = fit_cart(x.view(), Targets::Values(&[1.0, 2.0, 4.0]), &[1.0, 1.0, 2.0], &TreeParams::mse(2), 0)
            .unwrap();
        assert_eq!(t.nodes, vec![Node::Leaf { value: vec![11.0 / 4.0] }]);
    }

    #[test]
    fn equal_gain_prefers_lowest_feature() {
        // both columns separate the classes perfectly
        let x = array![[0.0, 0.0], [1.0, 1.0]];
        let t = fit_cart(
            x.view(),
            Targets::Classes { labels: &[0, 1], n_classes: 2 },
            &[1.0; 2],
            &TreeParams::gini(1),
            0,
        )
        .unwrap();
        assert!(matches!(t.nodes[0], Node::Split { feature: 0, threshold, .. } if threshold == 0.5));
    }

    #[test]
    fn min_samples_leaf_is_respected() {
        let x = array![[0.0], [1.0], [2.0], [3.0]];
        let params = TreeParams { min_samples_leaf: 2, ..TreeParams::gini(4) };
        let t = fit_cart(
            x.view(),
            Targets::Classes { labels: &[0, 1, 1, 1], n_classes: 2 },
            &[1.0; 4],
            &params,
            0,
        )
        .unwrap();
        assert!(matches!(t.nodes[0], Node::Split { threshold, .. } if threshold == 1.5));
        assert_eq!(t.n_leaves(), 2);
    }

    #[test]
    fn input_errors() {
        let x = array![[0.0], [f64::NAN]];
        let y = [0, 1];
        let cls = Targets::Classes { labels: &y, n_classes: 2 };
        let p = TreeParams::gini(2);
        assert_eq!(fit_cart(x.view(), cls, &[1.0; 2], &p, 0).unwrap_err(), CartError::NaN { row: 1, col: 0 });
        let x = array![[0.0], [1.0]];
        assert_eq!(
            fit_cart(Array2::<f64>::zeros((0, 1)).view(), Targets::Values(&[]), &[], &TreeParams::mse(1), 0)
                .unwrap_err(),
            CartError::Empty
        );
        assert_eq!(fit_cart(x.view(), cls, &[0.0; 2], &p, 0).unwrap_err(), CartError::Weights);
        assert!(matches!(fit_cart(x.view(), cls, &[1.0], &p, 0), Err(CartError::Length { .. })));
        assert!(matches!(
            fit_cart(x.view(), Targets::Classes { labels: &[0, 2], n_classes: 2 }, &[1.0; 2], &p, 0),
            Err(CartError::Label { label: 2, .. })
        ));
        assert!(matches!(fit_cart(x.view(), Targets::Values(&[0.0, 1.0]), &[1.0; 2], &p, 0), Err(CartError::Params(_))));
        let t = fit_cart(x.view(), cls, &[1.0; 2], &p, 0).unwrap();
        assert!(matches!(predict_cart(&t, array![[1.0, 2.0]].view()), Err(CartError::Dimension { .. })));
    }

    #[test]
    fn json_form_round_trips() {
        let x = array![[0.0, 3.0], [1.0, 2.0], [2.0, 1.0], [3.0, 0.0]];
        let t = fit_cart(
            x.view(),
            Targets::Classes { labels: &[0, 0, 1, 1], n_classes: 2 },
            &[1.0; 4],
            &TreeParams::gini(3),
            0,
        )
        .unwrap();
        assert_eq!(DecisionTree::from_json(&t.to_json()).unwrap(), t);
    }
}
