//! Two-level stacked generalization. Base learners produce out-of-fold class
//! probabilities, a meta-learner is trained on them, and the bases are then
//! refitted on every training row for inference.

use ndarray::{s, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cart::TreeParams;
use crate::ensembles::{AdaBoostParams, ForestParams, GbmParams};
use crate::learners::{KnnParams, MlpParams};
use crate::model::{ModelConfig, ModelError, TrainedModel};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackingSpec {
    pub base_learners: Vec<ModelConfig>,
    pub meta_learner: ModelConfig,
    pub n_folds: usize,
    pub seed: u64,
}

impl StackingSpec {
    pub fn default_bases() -> Vec<ModelConfig> {
        vec![
            ModelConfig::Gbm(GbmParams::default()),
            ModelConfig::AdaBoost(AdaBoostParams::default()),
            ModelConfig::Cart(TreeParams::default()),
        ]
    }

    pub fn with_meta(meta_learner: ModelConfig, seed: u64) -> Self {
        Self {
            base_learners: Self::default_bases(),
            meta_learner,
            n_folds: 5,
            seed,
        }
    }

    pub fn forest(seed: u64) -> Self {
        Self::with_meta(ModelConfig::Forest(ForestParams::default()), seed)
    }

    pub fn mlp(seed: u64) -> Self {
        Self::with_meta(ModelConfig::Mlp(MlpParams::default()), seed)
    }

    pub fn knn(seed: u64) -> Self {
        Self::with_meta(ModelConfig::Knn(KnnParams::default()), seed)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.base_learners.len() < 2 {
            return Err(ModelError::Spec(format!(
                "need at least 2 base learners, got {}",
                self.base_learners.len()
            )));
        }
        if self.n_folds < 2 {
            return Err(ModelError::Spec(format!("need at least 2 folds, got {}", self.n_folds)));
        }
        Ok(())
    }
}

/// One base-learner fit inside the cross-fitting loop.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldRecord {
    pub fold: usize,
    pub base: usize,
    pub train_rows: Vec<usize>,
    pub scored_rows: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OofFeatures {
    /// `N × (B·K)`: base learner `b` fills columns `b·K .. (b+1)·K`.
    pub meta: Array2<f64>,
    pub fold_of: Vec<usize>,
    pub log: Vec<FoldRecord>,
}

/// Seeded shuffle cut into `n_folds` contiguous chunks whose sizes differ by
/// at most one (the first `n mod n_folds` folds get the extra row).
pub fn assign_folds(n: usize, n_folds: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed::rng(seed));
    let (base, extra) = (n / n_folds, n % n_folds);
    let mut fold_of = vec![0; n];
    let mut pos = 0;
    for f in 0..n_folds {
        let size = base + usize::from(f < extra);
        for &row in &order[pos..pos + size] {
            fold_of[row] = f;
        }
        pos += size;
    }
    fold_of
}

const META_STREAM: u64 = 0x4D45_5441;

fn base_seed(spec_seed: u64, base: usize) -> u64 {
    seed::derive(spec_seed, 1 + base as u64)
}

pub fn oof_meta_features(
    bases: &[ModelConfig],
    n_folds: usize,
    spec_seed: u64,
    x: ArrayView2<f64>,
    y: &[usize],
    n_classes: usize,
) -> Result<OofFeatures, ModelError> {
    let n = x.nrows();
    if n_folds < 2 || n_folds > n {
        return Err(ModelError::Spec(format!("{n_folds} folds for {n} rows")));
    }
    let fold_of = assign_folds(n, n_folds, seed::derive(spec_seed, 0));
    let mut folds: Vec<(Vec<usize>, Vec<usize>)> = Vec::with_capacity(n_folds);
    for f in 0..n_folds {
        let (inside, outside): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| fold_of[i] == f);
        let mut seen = vec![false; n_classes];
        outside.iter().for_each(|&i| seen[y[i]] = true);
        if let Some(class) = seen.iter().position(|&s| !s) {
            return Err(ModelError::MissingClass { fold: f, class });
        }
        folds.push((outside, inside));
    }
    let jobs: Vec<(usize, usize)> = (0..n_folds).flat_map(|f| (0..bases.len()).map(move |b| (f, b))).collect();
    let results: Result<Vec<(usize, usize, Array2<f64>)>, ModelError> = jobs
        .par_iter()
        .map(|&(f, b)| {
            let (train, scored) = &folds[f];
            let tx = x.select(Axis(0), train);
            let ty: Vec<usize> = train.iter().map(|&i| y[i]).collect();
            let model = bases[b].fit(tx.view(), &ty, n_classes, seed::derive(base_seed(spec_seed, b), f as u64))?;
            let (_, p) = model.predict_proba(x.select(Axis(0), scored).view())?;
            Ok((f, b, p))
        })
        .collect();
    let mut meta = Array2::zeros((n, bases.len() * n_classes));
    let mut log = Vec::with_capacity(jobs.len());
    for (f, b, p) in results? {
        let (train, scored) = &folds[f];
        for (r, &row) in scored.iter().enumerate() {
            meta.slice_mut(s![row, b * n_classes..(b + 1) * n_classes]).assign(&p.row(r));
        }
        log.push(FoldRecord {
            fold: f,
            base: b,
            train_rows: train.clone(),
            scored_rows: scored.clone(),
        });
    }
    Ok(OofFeatures { meta, fold_of, log })
}

/// Out-of-fold features plus the bases refitted on all rows. Several
/// meta-learners can be trained on one base layer.
#[derive(Debug, Clone)]
pub struct BaseLayer {
    pub bases: Vec<ModelConfig>,
    pub n_folds: usize,
    pub seed: u64,
    pub n_classes: usize,
    pub oof: OofFeatures,
    pub refitted: Vec<TrainedModel>,
}

pub fn fit_base_layer(
    bases: &[ModelConfig],
    n_folds: usize,
    spec_seed: u64,
    x: ArrayView2<f64>,
    y: &[usize],
    n_classes: usize,
) -> Result<BaseLayer, ModelError> {
    let oof = oof_meta_features(bases, n_folds, spec_seed, x, y, n_classes)?;
    let refitted: Result<Vec<TrainedModel>, ModelError> = bases
        .par_iter()
        .enumerate()
        .map(|(b, c)| c.fit(x, y, n_classes, seed::derive(base_seed(spec_seed, b), n_folds as u64)))
        .collect();
    Ok(BaseLayer {
        bases: bases.to_vec(),
        n_folds,
        seed: spec_seed,
        n_classes,
        oof,
        refitted: refitted?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackingModel {
    pub spec: StackingSpec,
    pub n_classes: usize,
    pub bases: Vec<TrainedModel>,
    pub meta: TrainedModel,
}

pub fn fit_stacking(spec: &StackingSpec, x: ArrayView2<f64>, y: &[usize], n_classes: usize) -> Result<StackingModel, ModelError> {
    spec.validate()?;
    let layer = fit_base_layer(&spec.base_learners, spec.n_folds, spec.seed, x, y, n_classes)?;
    fit_meta(&layer, &spec.meta_learner, y, seed::derive(spec.seed, META_STREAM))
}

/// Trains `meta_learner` on an existing base layer.
pub fn fit_meta(layer: &BaseLayer, meta_learner: &ModelConfig, y: &[usize], meta_seed: u64) -> Result<StackingModel, ModelError> {
    let spec = StackingSpec {
        base_learners: layer.bases.clone(),
        meta_learner: meta_learner.clone(),
        n_folds: layer.n_folds,
        seed: layer.seed,
    };
    spec.validate()?;
    let meta = meta_learner.fit(layer.oof.meta.view(), y, layer.n_classes, meta_seed)?;
    Ok(StackingModel {
        spec,
        n_classes: layer.n_classes,
        bases: layer.refitted.clone(),
        meta,
    })
}

/// Base probabilities concatenated in base-learner order.
pub fn stacked_features(model: &StackingModel, x: ArrayView2<f64>) -> Result<Array2<f64>, ModelError> {
    let k = model.n_classes;
    let mut out = Array2::zeros((x.nrows(), model.bases.len() * k));
    for (b, base) in model.bases.iter().enumerate() {
        let (_, p) = base.predict_proba(x)?;
        out.slice_mut(s![.., b * k..(b + 1) * k]).assign(&p);
    }
    Ok(out)
}

pub fn predict_stacking(model: &StackingModel, x: ArrayView2<f64>) -> Result<(Vec<usize>, Array2<f64>), ModelError> {
    let features = stacked_features(model, x)?;
    model.meta.predict_proba(features.view())
}
