//! Min-max scaling, target discretization, per-target feature selection and
//! the seeded train/test split.

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::ingest::{Feature, WeatherTable};
use crate::seed;
use crate::stats;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum PreprocessError {
    #[error("cannot fit a scaler on an empty matrix")]
    EmptyMatrix,
    #[error("expected {expected} columns, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("no values to discretize")]
    EmptyValues,
    #[error("quantile scheme needs at least 2 classes, got {0}")]
    TooFewClasses(usize),
    #[error("class {0:?} has no members in the dataset")]
    EmptyClass(String),
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error("lag {lag} leaves no rows out of {rows}")]
    LagTooLarge { lag: usize, rows: usize },
}

/// Per-column extrema fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

pub fn fit_minmax(rows: ArrayView2<f64>) -> Result<ScalerParams, PreprocessError> {
    if rows.nrows() == 0 || rows.ncols() == 0 {
        return Err(PreprocessError::EmptyMatrix);
    }
    let min = rows
        .axis_iter(Axis(1))
        .map(|c| c.iter().copied().fold(f64::INFINITY, f64::min))
        .collect();
    let max = rows
        .axis_iter(Axis(1))
        .map(|c| c.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    Ok(ScalerParams { min, max })
}

impl ScalerParams {
    fn check(&self, rows: &ArrayView2<f64>) -> Result<(), PreprocessError> {
        if rows.ncols() != self.min.len() {
            return Err(PreprocessError::DimensionMismatch {
                expected: self.min.len(),
                found: rows.ncols(),
            });
        }
        Ok(())
    }
}

/// `(x − min) / (max − min)` per column; constant columns map to 0. Values
/// outside the fitted range are not clipped.
pub fn apply_minmax(params: &ScalerParams, rows: ArrayView2<f64>) -> Result<Array2<f64>, PreprocessError> {
    params.check(&rows)?;
    let mut out = rows.to_owned();
    for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
        let (lo, hi) = (params.min[j], params.max[j]);
        let span = hi - lo;
        col.mapv_inplace(|x| if span > 0.0 { (x - lo) / span } else { 0.0 });
    }
    Ok(out)
}

/// Inverse of [`apply_minmax`]; constant columns come back as their fitted value.
pub fn invert_minmax(params: &ScalerParams, rows: ArrayView2<f64>) -> Result<Array2<f64>, PreprocessError> {
    params.check(&rows)?;
    let mut out = rows.to_owned();
    for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
        let (lo, hi) = (params.min[j], params.max[j]);
        col.mapv_inplace(|x| lo + x * (hi - lo));
    }
    Ok(out)
}

/// How a continuous target becomes class labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Scheme {
    /// Fixed rain-intensity bands in mm/day. `thresholds[i]` is the lower
    /// edge (inclusive) of class `i + 1`.
    PrecipClasses { thresholds: Vec<f64>, names: Vec<String> },
    /// `k` classes split at the empirical k-quantiles of the fitting values.
    TempQuantiles { k: usize },
}

impl Scheme {
    pub fn precip_default() -> Self {
        Scheme::PrecipClasses {
            thresholds: vec![0.1, 10.0, 35.0],
            names: ["dry", "light", "moderate", "heavy"].map(String::from).to_vec(),
        }
    }
}

/// A fitted discretizer: values `v` get label `#{edges e : v > e}` for
/// quantile schemes and `#{thresholds t : v ≥ t}` for rain bands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discretizer {
    pub edges: Vec<f64>,
    /// Whether a value equal to an edge goes to the upper class.
    pub edge_inclusive_upper: bool,
    pub class_names: Vec<String>,
}

impl Discretizer {
    pub fn fit(scheme: &Scheme, fit_values: &[f64]) -> Result<Self, PreprocessError> {
        if fit_values.is_empty() {
            return Err(PreprocessError::EmptyValues);
        }
        match scheme {
            Scheme::PrecipClasses { thresholds, names } => {
                assert_eq!(names.len(), thresholds.len() + 1, "one name per band");
                Ok(Self {
                    edges: thresholds.clone(),
                    edge_inclusive_upper: true,
                    class_names: names.clone(),
                })
            }
            Scheme::TempQuantiles { k } => {
                if *k < 2 {
                    return Err(PreprocessError::TooFewClasses(*k));
                }
                let sorted = stats::sorted(fit_values);
                let edges = (1..*k)
                    .map(|j| stats::quantile_sorted(&sorted, j as f64 / *k as f64))
                    .collect();
                Ok(Self {
                    edges,
                    edge_inclusive_upper: false,
                    class_names: (1..=*k).map(|j| format!("q{j}")).collect(),
                })
            }
        }
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn label(&self, v: f64) -> usize {
        if self.edge_inclusive_upper {
            self.edges.iter().filter(|&&e| v >= e).count()
        } else {
            self.edges.iter().filter(|&&e| v > e).count()
        }
    }

    /// Labels every value and rejects label sets that leave a class empty.
    pub fn labels(&self, values: &[f64]) -> Result<Vec<usize>, PreprocessError> {
        let labels: Vec<usize> = values.iter().map(|&v| self.label(v)).collect();
        let mut seen = vec![false; self.n_classes()];
        for &l in &labels {
            seen[l] = true;
        }
        if let Some(k) = seen.iter().position(|s| !s) {
            return Err(PreprocessError::EmptyClass(self.class_names[k].clone()));
        }
        Ok(labels)
    }
}

/// Discretizes `values`, fitting quantile edges on `fit_rows` only (all rows
/// when `None`).
pub fn discretize_target(
    values: &[f64],
    scheme: &Scheme,
    fit_rows: Option<&[usize]>,
) -> Result<(Vec<usize>, Vec<String>), PreprocessError> {
    if values.is_empty() {
        return Err(PreprocessError::EmptyValues);
    }
    let fit_values: Vec<f64> = match fit_rows {
        Some(rows) => rows.iter().map(|&i| values[i]).collect(),
        None => values.to_vec(),
    };
    let d = Discretizer::fit(scheme, &fit_values)?;
    Ok((d.labels(values)?, d.class_names))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Precipitation,
    Temperature,
}

impl Target {
    pub fn name(self) -> &'static str {
        match self {
            Target::Precipitation => "precipitation",
            Target::Temperature => "temperature",
        }
    }

    pub fn source_feature(self) -> Feature {
        match self {
            Target::Precipitation => Feature::PrecTot,
            Target::Temperature => Feature::T2m,
        }
    }

    /// Features withheld from the model inputs for this target.
    pub fn dropped_features(self) -> &'static [Feature] {
        match self {
            Target::Precipitation => &[Feature::PrecTot],
            Target::Temperature => &[
                Feature::T2m,
                Feature::T2mMax,
                Feature::T2mMin,
                Feature::T2mRange,
                Feature::Ts,
                Feature::T2mWet,
            ],
        }
    }

    pub fn default_scheme(self) -> Scheme {
        match self {
            Target::Precipitation => Scheme::precip_default(),
            Target::Temperature => Scheme::TempQuantiles { k: 4 },
        }
    }
}

impl std::str::FromStr for Target {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "precipitation" => Ok(Target::Precipitation),
            "temperature" => Ok(Target::Temperature),
            other => Err(format!("unknown target {other:?}")),
        }
    }
}

/// Input matrix for `target`: every table feature except the target's
/// aliases, in table order.
pub fn select_features(table: &WeatherTable, target: Target) -> (Array2<f64>, Vec<String>) {
    let kept: Vec<Feature> = Feature::ALL
        .iter()
        .copied()
        .filter(|f| !target.dropped_features().contains(f))
        .collect();
    let mut m = Array2::zeros((table.len(), kept.len()));
    for (i, r) in table.records().iter().enumerate() {
        for (j, f) in kept.iter().enumerate() {
            m[[i, j]] = r.get(*f);
        }
    }
    (m, kept.iter().map(|f| f.name().to_string()).collect())
}

/// Pairs the features of day `t` with the target of day `t + lag`.
pub fn apply_lag(
    features: Array2<f64>,
    target: &[f64],
    lag: usize,
) -> Result<(Array2<f64>, Vec<f64>), PreprocessError> {
    let n = features.nrows();
    if lag >= n {
        return Err(PreprocessError::LagTooLarge { lag, rows: n });
    }
    let x = features.slice(ndarray::s![..n - lag, ..]).to_owned();
    Ok((x, target[lag..].to_vec()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
    pub seed: u64,
}

/// Seeded shuffle of `0..n`; the first `round(test_fraction·n)` indices form
/// the test set.
pub fn split_train_test(n: usize, test_fraction: f64, seed: u64) -> Result<SplitIndices, PreprocessError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(PreprocessError::InvalidSplit(format!(
            "test fraction {test_fraction} outside (0, 1)"
        )));
    }
    if n < 2 {
        return Err(PreprocessError::InvalidSplit(format!("need at least 2 rows, got {n}")));
    }
    let n_test = (test_fraction * n as f64).round() as usize;
    if n_test == 0 || n_test == n {
        return Err(PreprocessError::InvalidSplit(format!(
            "{test_fraction} of {n} rows leaves an empty side"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed::rng(seed));
    let train_idx = order.split_off(n_test);
    Ok(SplitIndices {
        train_idx,
        test_idx: order,
        seed,
    })
}

/// Scaled features with integer labels for one prediction target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub features: Array2<f64>,
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
    pub feature_names: Vec<String>,
    pub target_name: String,
}

impl LabeledDataset {
    pub fn new(
        features: Array2<f64>,
        labels: Vec<usize>,
        class_names: Vec<String>,
        feature_names: Vec<String>,
        target_name: impl Into<String>,
    ) -> Result<Self, PreprocessError> {
        if features.nrows() != labels.len() {
            return Err(PreprocessError::DimensionMismatch {
                expected: features.nrows(),
                found: labels.len(),
            });
        }
        if features.ncols() != feature_names.len() {
            return Err(PreprocessError::DimensionMismatch {
                expected: features.ncols(),
                found: feature_names.len(),
            });
        }
        let mut seen = vec![false; class_names.len()];
        for &l in &labels {
            match seen.get_mut(l) {
                Some(s) => *s = true,
                None => {
                    return Err(PreprocessError::DimensionMismatch {
                        expected: class_names.len(),
                        found: l + 1,
                    })
                }
            }
        }
        if let Some(k) = seen.iter().position(|s| !s) {
            return Err(PreprocessError::EmptyClass(class_names[k].clone()));
        }
        Ok(Self {
            features,
            labels,
            class_names,
            feature_names,
            target_name: target_name.into(),
        })
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn rows(&self, idx: &[usize]) -> (Array2<f64>, Vec<usize>) {
        (
            self.features.select(Axis(0), idx),
            idx.iter().map(|&i| self.labels[i]).collect(),
        )
    }
}
