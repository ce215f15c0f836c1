//! Run configuration: a flat TOML table in which every key is optional.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

use crate::cart::TreeParams;
use crate::ensembles::{AdaBoostParams, FeatureSampling, ForestParams, GbmParams};
use crate::ingest::{CleaningPolicy, DHAKA_LATITUDE, DHAKA_LONGITUDE};
use crate::learners::{KnnParams, MlpParams};
use crate::model::ModelConfig;
use crate::preprocess::{Scheme, Target};
use crate::stacking::StackingSpec;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// How the three stacking names map onto a stack.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StackReading {
    /// The named model is the meta-learner over `stack_bases`.
    NamedMeta,
    /// The named model joins `stack_bases` and `stack_default_meta` sits on top.
    NamedBase,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub latitude: f64,
    pub longitude: f64,
    /// First day requested.
    pub start: NaiveDate,
    /// Last day requested (inclusive).
    pub end: NaiveDate,
    pub cleaning: CleaningPolicy,
    pub raw_csv: PathBuf,
    pub clean_csv: PathBuf,
    pub output_dir: PathBuf,

    pub target: Target,
    pub precip_thresholds: Vec<f64>,
    pub precip_class_names: Vec<String>,
    pub temp_classes: usize,
    /// Predict the label `lag` days after the feature row.
    pub lag: usize,
    pub test_fraction: f64,
    pub seed: u64,

    pub histogram_bins: usize,
    /// `gaussian_kde` or `histogram`.
    pub density_method: String,

    pub cart_max_depth: usize,
    pub cart_min_samples_leaf: usize,
    pub ada_rounds: usize,
    pub ada_max_depth: usize,
    pub gbm_rounds: usize,
    pub gbm_learning_rate: f64,
    pub gbm_max_depth: usize,
    pub forest_trees: usize,
    pub forest_max_depth: usize,
    pub mlp_hidden: Vec<usize>,
    pub mlp_epochs: usize,
    pub mlp_batch_size: usize,
    pub mlp_learning_rate: f64,
    pub mlp_momentum: f64,
    pub knn_k: usize,

    pub stack_folds: usize,
    pub stack_bases: Vec<String>,
    pub stack_reading: StackReading,
    pub stack_default_meta: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        let precip = Scheme::precip_default();
        let Scheme::PrecipClasses { thresholds, names } = precip else { unreachable!() };
        Self {
            latitude: DHAKA_LATITUDE,
            longitude: DHAKA_LONGITUDE,
            start: NaiveDate::from_ymd_opt(2003, 1, 1).unwrap(),
            end: NaiveDate::from_ymd_opt(2023, 1, 1).unwrap(),
            cleaning: CleaningPolicy::LinearInterpolate,
            raw_csv: "data/dhaka_raw.csv".into(),
            clean_csv: "data/dhaka_clean.csv".into(),
            output_dir: "results".into(),
            target: Target::Precipitation,
            precip_thresholds: thresholds,
            precip_class_names: names,
            temp_classes: 4,
            lag: 0,
            test_fraction: 0.15,
            seed: 42,
            histogram_bins: 30,
            density_method: "gaussian_kde".into(),
            cart_max_depth: 6,
            cart_min_samples_leaf: 1,
            ada_rounds: 200,
            ada_max_depth: 2,
            gbm_rounds: 200,
            gbm_learning_rate: 0.1,
            gbm_max_depth: 3,
            forest_trees: 200,
            forest_max_depth: 6,
            mlp_hidden: vec![64],
            mlp_epochs: 200,
            mlp_batch_size: 32,
            mlp_learning_rate: 0.01,
            mlp_momentum: 0.9,
            knn_k: 15,
            stack_folds: 5,
            stack_bases: ["gradient_boosting", "ada_boost", "cart"].map(String::from).to_vec(),
            stack_reading: StackReading::NamedMeta,
            stack_default_meta: "random_forest".into(),
        }
    }
}

pub const MODEL_NAMES: [&str; 6] = ["cart", "ada_boost", "gradient_boosting", "random_forest", "neural_network", "knn"];

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn scheme(&self) -> Scheme {
        match self.target {
            Target::Precipitation => Scheme::PrecipClasses {
                thresholds: self.precip_thresholds.clone(),
                names: self.precip_class_names.clone(),
            },
            Target::Temperature => Scheme::TempQuantiles { k: self.temp_classes },
        }
    }

    pub fn model(&self, name: &str) -> Result<ModelConfig, ConfigError> {
        let tree = |depth: usize| TreeParams {
            min_samples_leaf: self.cart_min_samples_leaf,
            ..TreeParams::gini(depth)
        };
        Ok(match name {
            "cart" => ModelConfig::Cart(tree(self.cart_max_depth)),
            "ada_boost" => ModelConfig::AdaBoost(AdaBoostParams {
                rounds: self.ada_rounds,
                tree: tree(self.ada_max_depth),
            }),
            "gradient_boosting" => ModelConfig::Gbm(GbmParams {
                rounds: self.gbm_rounds,
                learning_rate: self.gbm_learning_rate,
                tree: TreeParams { min_samples_leaf: self.cart_min_samples_leaf, ..TreeParams::mse(self.gbm_max_depth) },
            }),
            "random_forest" => ModelConfig::Forest(ForestParams {
                n_trees: self.forest_trees,
                tree: tree(self.forest_max_depth),
                max_features: FeatureSampling::Sqrt,
                bootstrap: true,
            }),
            "neural_network" => ModelConfig::Mlp(MlpParams {
                hidden: self.mlp_hidden.clone(),
                epochs: self.mlp_epochs,
                batch_size: self.mlp_batch_size,
                learning_rate: self.mlp_learning_rate,
                momentum: self.mlp_momentum,
            }),
            "knn" => ModelConfig::Knn(KnnParams { k: self.knn_k }),
            other => {
                return Err(ConfigError::Invalid(format!(
                    "unknown model {other:?}; expected one of {}",
                    MODEL_NAMES.join(", ")
                )))
            }
        })
    }

    pub fn stack_bases(&self) -> Result<Vec<ModelConfig>, ConfigError> {
        self.stack_bases.iter().map(|b| self.model(b)).collect()
    }

    /// Stack for one of the named variants (`random_forest`,
    /// `neural_network`, `knn`) under the configured reading.
    pub fn stacking_spec(&self, named: &str, seed: u64) -> Result<StackingSpec, ConfigError> {
        let named_model = self.model(named)?;
        let mut bases = self.stack_bases()?;
        let meta = match self.stack_reading {
            StackReading::NamedMeta => named_model,
            StackReading::NamedBase => {
                bases.push(named_model);
                self.model(&self.stack_default_meta)?
            }
        };
        Ok(StackingSpec {
            base_learners: bases,
            meta_learner: meta,
            n_folds: self.stack_folds,
            seed,
        })
    }

    /// Checks every precondition that can be checked without data.
    /// Coordinates are left to the API, which reports its own error.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError::Invalid(msg));
        if self.start >= self.end {
            return bad(format!("start {} must precede end {}", self.start, self.end));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return bad(format!("test_fraction {} outside (0, 1)", self.test_fraction));
        }
        if self.precip_thresholds.windows(2).any(|w| w[0] >= w[1]) || self.precip_thresholds.is_empty() {
            return bad("precip_thresholds must be non-empty and strictly increasing".into());
        }
        if self.precip_class_names.len() != self.precip_thresholds.len() + 1 {
            return bad(format!(
                "{} precipitation thresholds need {} class names, got {}",
                self.precip_thresholds.len(),
                self.precip_thresholds.len() + 1,
                self.precip_class_names.len()
            ));
        }
        if self.temp_classes < 2 {
            return bad(format!("temp_classes must be >= 2, got {}", self.temp_classes));
        }
        if self.histogram_bins == 0 {
            return bad("histogram_bins must be >= 1".into());
        }
        if !matches!(self.density_method.as_str(), "gaussian_kde" | "histogram") {
            return bad(format!("density_method {:?} is not gaussian_kde or histogram", self.density_method));
        }
        for (key, v) in [
            ("cart_max_depth", self.cart_max_depth),
            ("cart_min_samples_leaf", self.cart_min_samples_leaf),
            ("ada_rounds", self.ada_rounds),
            ("ada_max_depth", self.ada_max_depth),
            ("gbm_rounds", self.gbm_rounds),
            ("gbm_max_depth", self.gbm_max_depth),
            ("forest_trees", self.forest_trees),
            ("forest_max_depth", self.forest_max_depth),
            ("mlp_batch_size", self.mlp_batch_size),
            ("knn_k", self.knn_k),
        ] {
            if v == 0 {
                return bad(format!("{key} must be >= 1"));
            }
        }
        if self.mlp_hidden.is_empty() || self.mlp_hidden.contains(&0) {
            return bad(format!("mlp_hidden must list positive widths, got {:?}", self.mlp_hidden));
        }
        if !(self.gbm_learning_rate > 0.0 && self.gbm_learning_rate <= 1.0) {
            return bad(format!("gbm_learning_rate {} outside (0, 1]", self.gbm_learning_rate));
        }
        if !(self.mlp_learning_rate >= 0.0) || !(0.0..1.0).contains(&self.mlp_momentum) {
            return bad("mlp_learning_rate must be >= 0 and mlp_momentum in [0, 1)".into());
        }
        if self.stack_folds < 2 {
            return bad(format!("stack_folds must be >= 2, got {}", self.stack_folds));
        }
        if self.stack_bases.len() < 2 {
            return bad("stack_bases needs at least 2 models".into());
        }
        self.stack_bases()?;
        self.model(&self.stack_default_meta)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(RunConfig::from_toml("").unwrap(), RunConfig::default());
    }

    #[test]
    fn round_trip_and_overrides() {
        let c = RunConfig::from_toml("seed = 7\ntarget = \"temperature\"\nstart = \"2021-01-01\"\n").unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.target, Target::Temperature);
        assert_eq!(c.start, NaiveDate::from_ymd_opt(2021, 1, 1).unwrap());
        assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(RunConfig::from_toml("sead = 3"), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn validation() {
        assert!(RunConfig::default().validate().is_ok());
        let bad = [
            RunConfig { test_fraction: 1.0, ..Default::default() },
            RunConfig { temp_classes: 1, ..Default::default() },
            RunConfig { stack_folds: 1, ..Default::default() },
            RunConfig { stack_bases: vec!["cart".into(), "svm".into()], ..Default::default() },
            RunConfig { precip_thresholds: vec![1.0, 0.5, 2.0], ..Default::default() },
            RunConfig { end: NaiveDate::from_ymd_opt(2002, 1, 1).unwrap(), ..Default::default() },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
    }

    #[test]
    fn stack_readings() {
        let mut c = RunConfig::default();
        let s = c.stacking_spec("knn", 1).unwrap();
        assert_eq!(s.base_learners.len(), 3);
        assert_eq!(s.meta_learner, ModelConfig::Knn(KnnParams { k: 15 }));
        c.stack_reading = StackReading::NamedBase;
        let s = c.stacking_spec("knn", 1).unwrap();
        assert_eq!(s.base_learners.len(), 4);
        assert_eq!(s.meta_learner.name(), "random_forest");
    }
}
