//! Exploratory statistics: Pearson correlations, density estimates and
//! monthly profiles, each with a CSV rendering.

use chrono::Datelike;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use crate::ingest::{Feature, WeatherTable};
use crate::stats::{mean, quantile_sorted, sample_std, sorted};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum AnalysisError {
    #[error("need at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("need at least 2 values, got {0}")]
    TooFewValues(usize),
    #[error("histogram needs at least one bin")]
    NoBins,
    #[error("no rows fall in month {0}")]
    EmptyMonth(u32),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub feature_names: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

/// Pearson r on two equal-length columns; 0 when either is constant.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0)
}

pub fn pearson_columns(names: Vec<String>, columns: &[Vec<f64>]) -> Result<CorrelationMatrix, AnalysisError> {
    let n = columns.first().map_or(0, Vec::len);
    if n < 2 {
        return Err(AnalysisError::TooFewRows(n));
    }
    let d = columns.len();
    let mut values = vec![vec![0.0; d]; d];
    for i in 0..d {
        values[i][i] = 1.0;
        for j in 0..i {
            let r = pearson(&columns[i], &columns[j]);
            values[i][j] = r;
            values[j][i] = r;
        }
    }
    Ok(CorrelationMatrix { feature_names: names, values })
}

pub fn pearson_matrix(table: &WeatherTable) -> Result<CorrelationMatrix, AnalysisError> {
    let columns: Vec<Vec<f64>> = Feature::ALL.iter().map(|&f| table.column(f)).collect();
    let names = WeatherTable::feature_names().into_iter().map(String::from).collect();
    pearson_columns(names, &columns)
}

impl CorrelationMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.feature_names.iter().position(|n| n == a)?;
        let j = self.feature_names.iter().position(|n| n == b)?;
        Some(self.values[i][j])
    }

    /// The other features ordered by decreasing |r| with `name`.
    pub fn ranked_partners(&self, name: &str) -> Vec<(String, f64)> {
        let Some(i) = self.feature_names.iter().position(|n| n == name) else {
            return Vec::new();
        };
        let mut out: Vec<(String, f64)> = self
            .feature_names
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(j, n)| (n.clone(), self.values[i][j]))
            .collect();
        out.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()));
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("feature");
        for n in &self.feature_names {
            write!(out, ",{n}").unwrap();
        }
        out.push('\n');
        for (n, row) in self.feature_names.iter().zip(&self.values) {
            out.push_str(n);
            for v in row {
                write!(out, ",{v}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum DensityMethod {
    Histogram { bins: usize },
    GaussianKde,
}

pub const KDE_GRID_POINTS: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    /// Bin centres for histograms, evaluation points for the KDE.
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    /// Histogram bin width; `None` for a KDE.
    pub bin_width: Option<f64>,
    pub bandwidth: Option<f64>,
    /// Set when a KDE was requested on zero-variance data.
    pub fell_back_to_histogram: bool,
}

pub fn silverman_bandwidth(values: &[f64]) -> f64 {
    1.06 * sample_std(values) * (values.len() as f64).powf(-0.2)
}

fn histogram(values: &[f64], bins: usize) -> DensityEstimate {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let n = values.len() as f64;
    if lo == hi {
        // every value identical: one unit-width bin holds all the mass
        return DensityEstimate {
            grid: vec![lo],
            density: vec![1.0],
            bin_width: Some(1.0),
            bandwidth: None,
            fell_back_to_histogram: false,
        };
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in values {
        let b = (((v - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    DensityEstimate {
        grid: (0..bins).map(|b| lo + (b as f64 + 0.5) * width).collect(),
        density: counts.iter().map(|&c| c as f64 / (n * width)).collect(),
        bin_width: Some(width),
        bandwidth: None,
        fell_back_to_histogram: false,
    }
}

/// Histogram over `[min, max]` (last bin closed) or a Gaussian KDE with
/// Silverman's bandwidth on a 256-point grid spanning `[min − 3h, max + 3h]`.
/// A KDE on constant data falls back to a 10-bin histogram.
pub fn density_estimate(values: &[f64], method: DensityMethod) -> Result<DensityEstimate, AnalysisError> {
    if values.len() < 2 {
        return Err(AnalysisError::TooFewValues(values.len()));
    }
    match method {
        DensityMethod::Histogram { bins: 0 } => Err(AnalysisError::NoBins),
        DensityMethod::Histogram { bins } => Ok(histogram(values, bins)),
        DensityMethod::GaussianKde => {
            let h = silverman_bandwidth(values);
            if h == 0.0 {
                let mut est = histogram(values, 10);
                est.fell_back_to_histogram = true;
                return Ok(est);
            }
            let lo = values.iter().copied().fold(f64::INFINITY, f64::min) - 3.0 * h;
            let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 3.0 * h;
            let step = (hi - lo) / (KDE_GRID_POINTS - 1) as f64;
            let norm = 1.0 / (values.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
            let grid: Vec<f64> = (0..KDE_GRID_POINTS).map(|i| lo + i as f64 * step).collect();
            let density = grid
                .iter()
                .map(|&g| norm * values.iter().map(|v| (-0.5 * ((g - v) / h).powi(2)).exp()).sum::<f64>())
                .collect();
            Ok(DensityEstimate {
                grid,
                density,
                bin_width: None,
                bandwidth: Some(h),
                fell_back_to_histogram: false,
            })
        }
    }
}

impl DensityEstimate {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("grid,density\n");
        for (g, d) in self.grid.iter().zip(&self.density) {
            writeln!(out, "{g},{d}").unwrap();
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthStats {
    pub month: u32,
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthlyProfile {
    pub feature: String,
    pub months: Vec<MonthStats>,
}

/// Groups by calendar month across years; quartiles interpolate linearly.
pub fn monthly_profile(table: &WeatherTable, feature: Feature) -> Result<MonthlyProfile, AnalysisError> {
    let mut by_month: Vec<Vec<f64>> = vec![Vec::new(); 12];
    for r in table.records() {
        by_month[r.date.month0() as usize].push(r.get(feature));
    }
    let months = by_month
        .iter()
        .enumerate()
        .map(|(m, vals)| {
            if vals.is_empty() {
                return Err(AnalysisError::EmptyMonth(m as u32 + 1));
            }
            let s = sorted(vals);
            Ok(MonthStats {
                month: m as u32 + 1,
                count: vals.len(),
                mean: mean(vals),
                median: quantile_sorted(&s, 0.5),
                q1: quantile_sorted(&s, 0.25),
                q3: quantile_sorted(&s, 0.75),
            })
        })
        .collect::<Result<_, _>>()?;
    Ok(MonthlyProfile {
        feature: feature.name().to_string(),
        months,
    })
}

impl MonthlyProfile {
    /// Row-weighted mean over the given months.
    pub fn mean_over(&self, months: &[u32]) -> f64 {
        let (sum, n) = self
            .months
            .iter()
            .filter(|m| months.contains(&m.month))
            .fold((0.0, 0usize), |(s, n), m| (s + m.mean * m.count as f64, n + m.count));
        sum / n as f64
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("month,mean,median,q1,q3\n");
        for m in &self.months {
            writeln!(out, "{},{},{},{},{}", m.month, m.mean, m.median, m.q1, m.q3).unwrap();
        }
        out
    }
}
