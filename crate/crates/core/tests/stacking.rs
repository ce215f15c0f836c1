use std::collections::HashSet;

use dhaka_weather::cart::TreeParams;
use dhaka_weather::learners::{fit_knn, predict_knn, KnnParams};
use dhaka_weather::model::ModelConfig;
use dhaka_weather::seed;
use dhaka_weather::stacking::{assign_folds, fit_stacking, oof_meta_features, StackingSpec};
use ndarray::{s, Array2, Axis};
use proptest::prelude::*;
use rand::Rng;

fn blobs(n: usize, k: usize, seed: u64) -> (Array2<f64>, Vec<usize>) {
    let mut rng = seed::rng(seed);
    let y: Vec<usize> = (0..n).map(|i| i % k).collect();
    let x = Array2::from_shape_fn((n, 2), |(i, j)| y[i] as f64 * 10.0 + j as f64 + rng.random_range(-0.5..0.5));
    (x, y)
}

fn cheap_bases() -> Vec<ModelConfig> {
    vec![ModelConfig::Cart(TreeParams::gini(2)), ModelConfig::Knn(KnnParams { k: 3 })]
}

#[test]
fn fold_log_never_scores_a_training_row() {
    let mut rng = seed::rng(17);
    let (x, y) = blobs(90, 3, 2);
    for _ in 0..20 {
        let n_folds = rng.random_range(2..=10);
        let s = rng.random::<u64>();
        let oof = oof_meta_features(&cheap_bases(), n_folds, s, x.view(), &y, 3).unwrap();
        assert_eq!(oof.log.len(), n_folds * 2);
        for rec in &oof.log {
            let train: HashSet<usize> = rec.train_rows.iter().copied().collect();
            assert!(rec.scored_rows.iter().all(|r| !train.contains(r)));
            assert!(rec.scored_rows.iter().all(|&r| oof.fold_of[r] == rec.fold));
            assert_eq!(rec.train_rows.len() + rec.scored_rows.len(), 90);
        }
        for b in 0..2 {
            let mut scored: Vec<usize> = oof.log.iter().filter(|r| r.base == b).flat_map(|r| r.scored_rows.clone()).collect();
            scored.sort_unstable();
            assert_eq!(scored, (0..90).collect::<Vec<_>>());
        }
    }
}

#[test]
fn two_knn_bases_unrolled_by_hand() {
    let (x, y) = blobs(24, 2, 5);
    let mut rng = seed::rng(6);
    let x = x.mapv(|v| v + rng.random_range(-8.0..8.0));
    let bases = vec![ModelConfig::Knn(KnnParams { k: 1 }), ModelConfig::Knn(KnnParams { k: 5 })];
    let spec_seed = 31;
    let oof = oof_meta_features(&bases, 4, spec_seed, x.view(), &y, 2).unwrap();
    let fold_of = assign_folds(24, 4, seed::derive(spec_seed, 0));
    assert_eq!(oof.fold_of, fold_of);
    let mut expect = Array2::zeros((24, 4));
    for f in 0..4 {
        let train: Vec<usize> = (0..24).filter(|&i| fold_of[i] != f).collect();
        let held: Vec<usize> = (0..24).filter(|&i| fold_of[i] == f).collect();
        let ty: Vec<usize> = train.iter().map(|&i| y[i]).collect();
        for (b, k) in [1, 5].into_iter().enumerate() {
            let m = fit_knn(x.select(Axis(0), &train).view(), &ty, 2, k).unwrap();
            let (_, p) = predict_knn(&m, x.select(Axis(0), &held).view()).unwrap();
            for (r, &row) in held.iter().enumerate() {
                expect.slice_mut(s![row, 2 * b..2 * b + 2]).assign(&p.row(r));
            }
        }
    }
    assert_eq!(oof.meta, expect);
}

#[test]
fn perfect_bases_give_one_hot_features_and_exact_predictions() {
    let (x, y) = blobs(60, 3, 9);
    let spec = StackingSpec {
        base_learners: cheap_bases(),
        meta_learner: ModelConfig::Knn(KnnParams { k: 1 }),
        n_folds: 5,
        seed: 3,
    };
    let model = fit_stacking(&spec, x.view(), &y, 3).unwrap();
    let oof = oof_meta_features(&spec.base_learners, 5, 3, x.view(), &y, 3).unwrap();
    for (i, row) in oof.meta.outer_iter().enumerate() {
        for b in 0..2 {
            for k in 0..3 {
                assert_eq!(row[3 * b + k], if k == y[i] { 1.0 } else { 0.0 });
            }
        }
    }
    assert_eq!(model.meta.predict(oof.meta.view()).unwrap(), y);
    assert_eq!(dhaka_weather::stacking::predict_stacking(&model, x.view()).unwrap().0, y);
}

#[test]
fn reordering_seedless_bases_permutes_meta_columns() {
    let (x, y) = blobs(45, 3, 12);
    let mut rng = seed::rng(1);
    let x = x.mapv(|v| v + rng.random_range(-6.0..6.0));
    let a = vec![ModelConfig::Knn(KnnParams { k: 1 }), ModelConfig::Knn(KnnParams { k: 7 })];
    let b: Vec<ModelConfig> = a.iter().rev().cloned().collect();
    let oa = oof_meta_features(&a, 3, 8, x.view(), &y, 3).unwrap();
    let ob = oof_meta_features(&b, 3, 8, x.view(), &y, 3).unwrap();
    assert_eq!(oa.meta.slice(s![.., 0..3]), ob.meta.slice(s![.., 3..6]));
    assert_eq!(oa.meta.slice(s![.., 3..6]), ob.meta.slice(s![.., 0..3]));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn out_of_fold_scoring_is_leak_free(n in 12usize..60, n_folds in 2usize..6, s in any::<u64>()) {
        let (x, y) = blobs(n, 2, s);
        let oof = oof_meta_features(&cheap_bases(), n_folds, s, x.view(), &y, 2).unwrap();
        let sizes: Vec<usize> = (0..n_folds).map(|f| oof.fold_of.iter().filter(|&&g| g == f).count()).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        for rec in &oof.log {
            prop_assert!(rec.scored_rows.iter().all(|r| !rec.train_rows.contains(r)));
        }
        for row in oof.meta.outer_iter() {
            prop_assert!((row.slice(s![0..2]).sum() - 1.0).abs() < 1e-9);
            prop_assert!((row.slice(s![2..4]).sum() - 1.0).abs() < 1e-9);
        }
    }
}
