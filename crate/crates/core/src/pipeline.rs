//! End-to-end steps behind the command-line tool: data preparation, the
//! six-model benchmark, the exploratory analysis, and writing results.

use ndarray::{Array2, Axis};
use serde::Serialize;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::analysis::{density_estimate, monthly_profile, pearson_matrix, AnalysisError, DensityMethod};
use crate::config::{ConfigError, RunConfig};
use crate::ingest::{Feature, WeatherTable};
use crate::metrics::{classification_scores, confusion_matrix, majority_baseline, render_report, ConfusionMatrix, ReportRow, ScoreReport};
use crate::model::{ModelError, TrainedModel};
use crate::preprocess::{apply_lag, apply_minmax, fit_minmax, select_features, split_train_test, Discretizer, PreprocessError, ScalerParams, SplitIndices};
use crate::seed::{self, streams};
use crate::stacking::{fit_base_layer, fit_meta, BaseLayer};
use crate::stats::argmax;

/// Benchmark rows in report order.
pub const ALGORITHMS: [&str; 6] = [
    "Gradient Boosting",
    "Ada Boost",
    "Artificial Neural Network",
    "Stacking Random Forest",
    "Stacking Neural Network",
    "Stacking KNN",
];

pub fn slug(algorithm: &str) -> String {
    algorithm.to_lowercase().replace(' ', "_")
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("{algorithm} failed: {source}")]
    Model { algorithm: String, source: ModelError },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

fn write(path: &Path, text: &str) -> Result<(), PipelineError> {
    fs::write(path, text).map_err(|source| PipelineError::Io { path: path.to_owned(), source })
}

/// Scaled features and labels with the shared split.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub features: Array2<f64>,
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
    pub feature_names: Vec<String>,
    pub split: SplitIndices,
    pub scaler: ScalerParams,
    pub discretizer: Discretizer,
}

impl Prepared {
    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn train(&self) -> (Array2<f64>, Vec<usize>) {
        self.rows(&self.split.train_idx)
    }

    pub fn test(&self) -> (Array2<f64>, Vec<usize>) {
        self.rows(&self.split.test_idx)
    }

    fn rows(&self, idx: &[usize]) -> (Array2<f64>, Vec<usize>) {
        (self.features.select(Axis(0), idx), idx.iter().map(|&i| self.labels[i]).collect())
    }
}

/// Feature selection, lag, split, and scaler/discretizer fitted on the
/// training rows only.
pub fn prepare(config: &RunConfig, table: &WeatherTable) -> Result<Prepared, PipelineError> {
    let (raw, feature_names) = select_features(table, config.target);
    let target = table.column(config.target.source_feature());
    let (raw, target) = apply_lag(raw, &target, config.lag)?;
    let split = split_train_test(raw.nrows(), config.test_fraction, seed::derive(config.seed, streams::SPLIT))?;
    let scaler = fit_minmax(raw.select(Axis(0), &split.train_idx).view())?;
    let features = apply_minmax(&scaler, raw.view())?;
    let train_values: Vec<f64> = split.train_idx.iter().map(|&i| target[i]).collect();
    let discretizer = Discretizer::fit(&config.scheme(), &train_values)?;
    let labels = discretizer.labels(&target)?;
    Ok(Prepared {
        features,
        labels,
        class_names: discretizer.class_names.clone(),
        feature_names,
        split,
        scaler,
        discretizer,
    })
}

#[derive(Debug, Clone)]
pub struct ModelResult {
    pub algorithm: String,
    pub confusion: ConfusionMatrix,
    pub scores: ScoreReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchmarkSummary {
    pub target: String,
    pub n_train: usize,
    pub n_test: usize,
    pub class_names: Vec<String>,
    pub test_class_counts: Vec<usize>,
    pub majority_baseline_accuracy: f64,
    /// Out-of-fold accuracy of each stacking base learner, in the order the bases are listed.
    pub stack_base_oof_accuracy: Vec<(String, f64)>,
}

#[derive(Debug)]
pub struct BenchmarkOutcome {
    pub summary: BenchmarkSummary,
    /// One entry per algorithm in [`ALGORITHMS`] order.
    pub results: Vec<Result<ModelResult, PipelineError>>,
}

impl BenchmarkOutcome {
    pub fn first_failure(&self) -> Option<&PipelineError> {
        self.results.iter().find_map(|r| r.as_ref().err())
    }

    pub fn rows(&self) -> Vec<ReportRow> {
        self.results
            .iter()
            .filter_map(|r| r.as_ref().ok())
            .map(|m| ReportRow {
                algorithm: m.algorithm.clone(),
                target: self.summary.target.clone(),
                scores: m.scores.clone(),
            })
            .collect()
    }
}

fn evaluate(algorithm: &str, model: Result<TrainedModel, ModelError>, x: &Array2<f64>, y: &[usize], prep: &Prepared) -> Result<ModelResult, PipelineError> {
    let wrap = |source: ModelError| PipelineError::Model { algorithm: algorithm.to_string(), source };
    let pred = model.and_then(|m| m.predict(x.view())).map_err(wrap)?;
    let confusion = confusion_matrix(y, &pred, prep.n_classes())
        .and_then(|c| c.with_names(&prep.class_names))
        .expect("labels come from the discretizer");
    Ok(ModelResult {
        algorithm: algorithm.to_string(),
        scores: classification_scores(&confusion),
        confusion,
    })
}

fn oof_accuracies(layer: &BaseLayer, y: &[usize]) -> Vec<(String, f64)> {
    let k = layer.n_classes;
    layer
        .bases
        .iter()
        .enumerate()
        .map(|(b, cfg)| {
            let correct = layer
                .oof
                .meta
                .outer_iter()
                .zip(y)
                .filter(|(row, &label)| argmax(&row.as_slice().unwrap()[b * k..(b + 1) * k]) == label)
                .count();
            (cfg.name().to_string(), correct as f64 / y.len() as f64)
        })
        .collect()
}

/// Trains all six models on one shared split and scores them on the test
/// rows. A failing model does not stop the others.
pub fn run_benchmark(config: &RunConfig, prep: &Prepared) -> Result<BenchmarkOutcome, PipelineError> {
    config.validate()?;
    let (xtr, ytr) = prep.train();
    let (xte, yte) = prep.test();
    let k = prep.n_classes();
    let gbm = config.model("gradient_boosting")?;
    let ada = config.model("ada_boost")?;
    let mlp = config.model("neural_network")?;
    let stack_names = ["random_forest", "neural_network", "knn"];
    let specs = stack_names
        .iter()
        .map(|n| config.stacking_spec(n, seed::derive(config.seed, streams::STACKING)))
        .collect::<Result<Vec<_>, _>>()?;

    let fit = |cfg: &crate::model::ModelConfig, stream| cfg.fit(xtr.view(), &ytr, k, seed::derive(config.seed, stream));
    let ((m_gbm, m_ada), (m_mlp, layers)) = rayon::join(
        || rayon::join(|| fit(&gbm, streams::GRADIENT_BOOSTING), || fit(&ada, streams::ADABOOST)),
        || {
            rayon::join(
                || fit(&mlp, streams::NEURAL_NETWORK),
                || {
                    // one base layer serves every stack whose bases coincide
                    let mut layers: Vec<(Vec<_>, Result<BaseLayer, ModelError>)> = Vec::new();
                    for s in &specs {
                        if !layers.iter().any(|(b, _)| *b == s.base_learners) {
                            let layer = fit_base_layer(&s.base_learners, s.n_folds, s.seed, xtr.view(), &ytr, k);
                            layers.push((s.base_learners.clone(), layer));
                        }
                    }
                    layers
                },
            )
        },
    );

    let stack_streams = [streams::STACK_FOREST, streams::STACK_MLP, streams::STACK_KNN];
    let mut stacks = Vec::new();
    let mut oof = Vec::new();
    for (spec, stream) in specs.iter().zip(stack_streams) {
        let (_, layer) = layers.iter().find(|(b, _)| *b == spec.base_learners).unwrap();
        let model = match layer {
            Ok(layer) => {
                if oof.is_empty() {
                    oof = oof_accuracies(layer, &ytr);
                }
                fit_meta(layer, &spec.meta_learner, &ytr, seed::derive(config.seed, stream)).map(|m| TrainedModel::Stacking(Box::new(m)))
            }
            Err(e) => Err(e.clone()),
        };
        stacks.push(model);
    }

    let mut models = vec![m_gbm, m_ada, m_mlp];
    models.extend(stacks);
    let results = ALGORITHMS
        .iter()
        .zip(models)
        .map(|(name, m)| evaluate(name, m, &xte, &yte, prep))
        .collect();
    let mut test_class_counts = vec![0; k];
    yte.iter().for_each(|&l| test_class_counts[l] += 1);
    Ok(BenchmarkOutcome {
        summary: BenchmarkSummary {
            target: config.target.name().to_string(),
            n_train: ytr.len(),
            n_test: yte.len(),
            class_names: prep.class_names.clone(),
            test_class_counts,
            majority_baseline_accuracy: majority_baseline(&ytr, &yte, k),
            stack_base_oof_accuracy: oof,
        },
        results,
    })
}

/// Writes the metrics CSV, the rendered table, one confusion grid per
/// successful model, a JSON summary, and the resolved config.
pub fn write_benchmark(dir: &Path, config: &RunConfig, outcome: &BenchmarkOutcome) -> Result<Vec<PathBuf>, PipelineError> {
    fs::create_dir_all(dir).map_err(|source| PipelineError::Io { path: dir.to_owned(), source })?;
    let target = &outcome.summary.target;
    let (table, csv) = render_report(&outcome.rows());
    let mut written = Vec::new();
    let mut put = |name: String, text: &str| -> Result<(), PipelineError> {
        let path = dir.join(name);
        write(&path, text)?;
        written.push(path);
        Ok(())
    };
    put(format!("metrics_{target}.csv"), &csv)?;
    let footer = format!(
        "\nMajority-class baseline: {:.2}%  (train {}, test {})\n",
        outcome.summary.majority_baseline_accuracy * 100.0,
        outcome.summary.n_train,
        outcome.summary.n_test
    );
    put(format!("table_{target}.txt"), &(table + &footer))?;
    for m in outcome.results.iter().flatten() {
        put(format!("confusion_{target}_{}.csv", slug(&m.algorithm)), &m.confusion.to_csv())?;
    }
    put(
        format!("summary_{target}.json"),
        &(serde_json::to_string_pretty(&outcome.summary).expect("summary serializes") + "\n"),
    )?;
    put("run_config.toml".into(), &config.to_toml())?;
    Ok(written)
}

/// Correlation matrix plus density and monthly files for PRECTOT and T2M.
pub fn run_analysis(dir: &Path, config: &RunConfig, table: &WeatherTable) -> Result<Vec<PathBuf>, PipelineError> {
    config.validate()?;
    fs::create_dir_all(dir).map_err(|source| PipelineError::Io { path: dir.to_owned(), source })?;
    let method = match config.density_method.as_str() {
        "histogram" => DensityMethod::Histogram { bins: config.histogram_bins },
        _ => DensityMethod::GaussianKde,
    };
    let mut written = Vec::new();
    let corr = pearson_matrix(table)?;
    let path = dir.join("corr.csv");
    write(&path, &corr.to_csv())?;
    written.push(path);
    for feature in [Feature::PrecTot, Feature::T2m] {
        let density = density_estimate(&table.column(feature), method)?;
        let path = dir.join(format!("density_{}.csv", feature.name()));
        write(&path, &density.to_csv())?;
        written.push(path);
        let profile = monthly_profile(table, feature)?;
        let path = dir.join(format!("monthly_{}.csv", feature.name()));
        write(&path, &profile.to_csv())?;
        written.push(path);
    }
    Ok(written)
}
